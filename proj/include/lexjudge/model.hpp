#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lexjudge/rng.hpp"
#include "lexjudge/tape.hpp"

namespace lexjudge::model {

// Whitespace tokenizer hashing each token into a fixed vocabulary.
struct Tokenizer {
    std::size_t vocab_size = 1000;
    static constexpr int kPad = 0;
    static constexpr int kCls = 1;
    static constexpr int kSep = 2;

    std::vector<int> encode(const std::string& text) const;
};

struct BlockingConfig {
    std::size_t block_length = 512;  // tokens per block, including the CLS/SEP wrap
    std::size_t max_blocks = 4;
};

// Fixed-shape block layout for one document. Pad blocks carry only PAD tokens,
// never CLS or SEP, and their mask bit is 0.
struct BlockBatch {
    std::vector<std::vector<int>> blocks;
    std::vector<int> block_mask;
};

BlockBatch tokenize_blocks(const Tokenizer& tokenizer, const BlockingConfig& config,
                           const std::string& text);

struct ModelConfig {
    std::size_t vocab_size = 1000;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t ffn = 256;
    std::size_t aggregator_layers = 2;
    BlockingConfig blocking;
    double dropout = 0.1;
    std::size_t adapter_reduction = 4;
    bool adapters_enabled = false;
    double label_smoothing = 0.1;
};

enum class ParamGroup { Adapter, LayerNorm, Head, Backbone };

// Classification is by name alone so every parameter lands in exactly one group.
ParamGroup classify(const std::string& parameter_name);

struct PartitionSummary {
    std::size_t adapter = 0;
    std::size_t layernorm = 0;
    std::size_t head = 0;
    std::size_t backbone = 0;
    std::size_t trainable = 0;
    std::size_t total = 0;
    double trainable_fraction = 0.0;
};

enum class TrainMode { Full, AdapterOnly };

class Model {
  public:
    Model(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    std::vector<tape::Parameter*> parameters();
    std::vector<tape::Parameter*> trainable_parameters();
    tape::Parameter& parameter(const std::string& name);

    void set_train_mode(TrainMode mode);
    PartitionSummary partition() const;

    // 1 x 2 logits for one document; dropout == nullptr runs in eval mode.
    tape::Var forward(tape::Tape& t, const BlockBatch& batch, Rng* dropout);

    std::vector<double> state() const;
    void restore(const std::vector<double>& state);

  private:
    tape::Var encode_block(tape::Tape& t, const std::vector<int>& block, Rng* dropout);
    tape::Var transformer_layer(tape::Tape& t, tape::Var x, const std::string& prefix,
                                const Eigen::MatrixXd& key_mask, Rng* dropout);
    tape::Var dropout_mask(tape::Tape& t, tape::Var x, Rng* dropout);

    ModelConfig config_;
    std::vector<std::unique_ptr<tape::Parameter>> params_;
};

int predict_label(const Eigen::MatrixXd& logits);

void save_checkpoint(Model& model, const std::string& path);
void load_checkpoint(Model& model, const std::string& path);

}  // namespace lexjudge::model
