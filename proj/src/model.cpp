#include "lexjudge/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "lexjudge/error.hpp"

namespace lexjudge::model {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<int> Tokenizer::encode(const std::string& text) const {
    if (vocab_size <= 3) throw Error(ErrorCode::Invalid, "tokenizer vocabulary too small");
    std::vector<int> ids;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            std::uint64_t h = fnv1a64(std::string_view(text).substr(start, i - start));
            ids.push_back(3 + int(h % std::uint64_t(vocab_size - 3)));
        }
    }
    return ids;
}

BlockBatch tokenize_blocks(const Tokenizer& tokenizer, const BlockingConfig& config,
                           const std::string& text) {
    if (config.block_length < 3) throw Error(ErrorCode::Invalid, "block length must be at least 3");
    if (config.max_blocks < 1) throw Error(ErrorCode::Invalid, "max blocks must be at least 1");

    std::vector<int> tokens = tokenizer.encode(text);
    std::size_t capacity = config.block_length - 2;
    std::size_t real = tokens.empty() ? 1 : (tokens.size() + capacity - 1) / capacity;
    real = std::min(real, config.max_blocks);

    BlockBatch batch;
    for (std::size_t b = 0; b < config.max_blocks; ++b) {
        std::vector<int> block(config.block_length, Tokenizer::kPad);
        if (b < real) {
            block[0] = Tokenizer::kCls;
            std::size_t start = b * capacity;
            std::size_t end = std::min(tokens.size(), start + capacity);
            for (std::size_t i = start; i < end; ++i) block[1 + i - start] = tokens[i];
            block[1 + end - start] = Tokenizer::kSep;
            batch.block_mask.push_back(1);
        } else {
            batch.block_mask.push_back(0);
        }
        batch.blocks.push_back(std::move(block));
    }
    return batch;
}

ParamGroup classify(const std::string& parameter_name) {
    if (parameter_name.find(".adapter.") != std::string::npos) return ParamGroup::Adapter;
    if (ends_with(parameter_name, ".gamma") || ends_with(parameter_name, ".beta"))
        return ParamGroup::LayerNorm;
    if (parameter_name.rfind("head.", 0) == 0) return ParamGroup::Head;
    return ParamGroup::Backbone;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    if (config_.hidden % config_.heads != 0)
        throw Error(ErrorCode::Invalid, "hidden size must divide evenly into heads");
    if (config_.adapters_enabled && config_.hidden % config_.adapter_reduction != 0)
        throw Error(ErrorCode::Invalid, "hidden size must divide by the adapter reduction");

    Rng rng = Rng::stream(seed, "init");
    enum class Init { Normal, Zero, One };
    auto add = [&](const std::string& name, std::size_t rows, std::size_t cols, Init init) {
        Eigen::Index r = Eigen::Index(rows), c = Eigen::Index(cols);
        Eigen::MatrixXd value(r, c);
        switch (init) {
            case Init::Normal:
                for (Eigen::Index i = 0; i < value.size(); ++i) value(i) = rng.normal() * 0.02;
                break;
            case Init::Zero: value.setZero(); break;
            case Init::One: value.setOnes(); break;
        }
        params_.push_back(std::make_unique<tape::Parameter>(name, std::move(value)));
    };
    auto add_norm = [&](const std::string& prefix) {
        add(prefix + ".gamma", 1, config_.hidden, Init::One);
        add(prefix + ".beta", 1, config_.hidden, Init::Zero);
    };
    auto add_layer = [&](const std::string& prefix) {
        std::size_t h = config_.hidden;
        for (const char* part : {"wq", "wk", "wv", "wo"}) {
            add(prefix + ".attn." + part, h, h, Init::Normal);
            add(prefix + ".attn.b" + std::string(part).substr(1), 1, h, Init::Zero);
        }
        add_norm(prefix + ".norm1");
        add(prefix + ".ffn.w1", h, config_.ffn, Init::Normal);
        add(prefix + ".ffn.b1", 1, config_.ffn, Init::Zero);
        add(prefix + ".ffn.w2", config_.ffn, h, Init::Normal);
        add(prefix + ".ffn.b2", 1, h, Init::Zero);
        if (config_.adapters_enabled) {
            std::size_t r = h / config_.adapter_reduction;
            add(prefix + ".adapter.down", h, r, Init::Normal);
            add(prefix + ".adapter.down_b", 1, r, Init::Zero);
            // Zero up-projection keeps the adapted forward equal to the base one.
            add(prefix + ".adapter.up", r, h, Init::Zero);
            add(prefix + ".adapter.up_b", 1, h, Init::Zero);
        }
        add_norm(prefix + ".norm2");
    };

    add("embed.token", config_.vocab_size, config_.hidden, Init::Normal);
    add("embed.position", config_.blocking.block_length, config_.hidden, Init::Normal);
    add_norm("embed.norm");
    for (std::size_t i = 0; i < config_.layers; ++i) add_layer("enc." + std::to_string(i));
    add("agg.position", config_.blocking.max_blocks, config_.hidden, Init::Normal);
    for (std::size_t i = 0; i < config_.aggregator_layers; ++i)
        add_layer("agg." + std::to_string(i));
    add("head.w", config_.hidden, 2, Init::Normal);
    add("head.b", 1, 2, Init::Zero);
}

std::vector<tape::Parameter*> Model::parameters() {
    std::vector<tape::Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<tape::Parameter*> Model::trainable_parameters() {
    std::vector<tape::Parameter*> out;
    for (auto& p : params_)
        if (p->trainable) out.push_back(p.get());
    return out;
}

tape::Parameter& Model::parameter(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return *p;
    throw Error(ErrorCode::Invalid, "unknown parameter: " + name);
}

void Model::set_train_mode(TrainMode mode) {
    if (mode == TrainMode::AdapterOnly && !config_.adapters_enabled)
        throw Error(ErrorCode::State, "adapter-only training needs adapters enabled");
    for (auto& p : params_) {
        if (mode == TrainMode::Full) {
            p->trainable = true;
        } else {
            p->trainable = classify(p->name) != ParamGroup::Backbone;
        }
    }
}

PartitionSummary Model::partition() const {
    PartitionSummary s;
    for (const auto& p : params_) {
        auto n = std::size_t(p->value.size());
        switch (classify(p->name)) {
            case ParamGroup::Adapter: s.adapter += n; break;
            case ParamGroup::LayerNorm: s.layernorm += n; break;
            case ParamGroup::Head: s.head += n; break;
            case ParamGroup::Backbone: s.backbone += n; break;
        }
        if (p->trainable) s.trainable += n;
        s.total += n;
    }
    s.trainable_fraction = s.total == 0 ? 0.0 : double(s.trainable) / double(s.total);
    return s;
}

tape::Var Model::dropout_mask(tape::Tape& t, tape::Var x, Rng* dropout) {
    if (dropout == nullptr || config_.dropout <= 0.0) return x;
    const auto& v = t.value(x);
    Eigen::MatrixXd mask(v.rows(), v.cols());
    double keep = 1.0 - config_.dropout;
    for (Eigen::Index i = 0; i < mask.size(); ++i)
        mask(i) = dropout->uniform() < config_.dropout ? 0.0 : 1.0 / keep;
    return tape::mul_elem(x, t.constant(std::move(mask)));
}

tape::Var Model::transformer_layer(tape::Tape& t, tape::Var x, const std::string& prefix,
                                   const Eigen::MatrixXd& key_mask, Rng* dropout) {
    auto P = [&](const std::string& suffix) -> tape::Var {
        return t.param(parameter(prefix + suffix));
    };
    std::size_t dh = config_.hidden / config_.heads;

    tape::Var q = tape::add_rowvec(tape::matmul(x, P(".attn.wq")), P(".attn.bq"));
    tape::Var k = tape::add_rowvec(tape::matmul(x, P(".attn.wk")), P(".attn.bk"));
    tape::Var v = tape::add_rowvec(tape::matmul(x, P(".attn.wv")), P(".attn.bv"));

    std::vector<tape::Var> heads;
    for (std::size_t h = 0; h < config_.heads; ++h) {
        tape::Var qh = tape::slice_cols(q, h * dh, dh);
        tape::Var kh = tape::slice_cols(k, h * dh, dh);
        tape::Var vh = tape::slice_cols(v, h * dh, dh);
        tape::Var scores = tape::scale(tape::matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh)));
        tape::Var attn = tape::masked_softmax_rows(scores, key_mask);
        heads.push_back(tape::matmul(attn, vh));
    }
    tape::Var o = tape::concat_cols(heads);
    o = tape::add_rowvec(tape::matmul(o, P(".attn.wo")), P(".attn.bo"));
    o = dropout_mask(t, o, dropout);
    x = tape::layernorm(tape::add(x, o), P(".norm1.gamma"), P(".norm1.beta"));

    tape::Var f = tape::add_rowvec(tape::matmul(x, P(".ffn.w1")), P(".ffn.b1"));
    f = tape::gelu(f);
    f = tape::add_rowvec(tape::matmul(f, P(".ffn.w2")), P(".ffn.b2"));
    if (config_.adapters_enabled) {
        tape::Var a = tape::add_rowvec(tape::matmul(f, P(".adapter.down")), P(".adapter.down_b"));
        a = tape::gelu(a);
        a = tape::add_rowvec(tape::matmul(a, P(".adapter.up")), P(".adapter.up_b"));
        f = tape::add(f, a);
    }
    f = dropout_mask(t, f, dropout);
    return tape::layernorm(tape::add(x, f), P(".norm2.gamma"), P(".norm2.beta"));
}

tape::Var Model::encode_block(tape::Tape& t, const std::vector<int>& block, Rng* dropout) {
    Eigen::MatrixXd key_mask(1, Eigen::Index(block.size()));
    for (std::size_t i = 0; i < block.size(); ++i)
        key_mask(0, Eigen::Index(i)) = block[i] == Tokenizer::kPad ? 0.0 : 1.0;

    std::vector<int> positions(block.size());
    for (std::size_t i = 0; i < block.size(); ++i) positions[i] = int(i);

    tape::Var x = tape::add(tape::gather_rows(t.param(parameter("embed.token")), block),
                            tape::gather_rows(t.param(parameter("embed.position")), positions));
    x = tape::layernorm(x, t.param(parameter("embed.norm.gamma")),
                        t.param(parameter("embed.norm.beta")));
    x = dropout_mask(t, x, dropout);
    for (std::size_t i = 0; i < config_.layers; ++i)
        x = transformer_layer(t, x, "enc." + std::to_string(i), key_mask, dropout);
    return tape::select_row(x, 0);
}

tape::Var Model::forward(tape::Tape& t, const BlockBatch& batch, Rng* dropout) {
    if (batch.blocks.size() != batch.block_mask.size())
        throw Error(ErrorCode::Invalid, "block batch mask length mismatch");

    std::vector<tape::Var> cls;
    for (std::size_t b = 0; b < batch.blocks.size(); ++b) {
        if (batch.block_mask[b] == 0) continue;  // pad blocks never reach the encoder
        if (batch.blocks[b].size() != config_.blocking.block_length)
            throw Error(ErrorCode::Invalid, "block length does not match the model");
        cls.push_back(encode_block(t, batch.blocks[b], dropout));
    }
    if (cls.empty()) throw Error(ErrorCode::Invalid, "document has no real blocks");
    if (cls.size() > config_.blocking.max_blocks)
        throw Error(ErrorCode::Invalid, "more real blocks than the model supports");

    std::vector<int> positions(cls.size());
    for (std::size_t i = 0; i < cls.size(); ++i) positions[i] = int(i);

    tape::Var x = tape::stack_rows(cls);
    x = tape::add(x, tape::gather_rows(t.param(parameter("agg.position")), positions));
    x = dropout_mask(t, x, dropout);

    Eigen::MatrixXd key_mask = Eigen::MatrixXd::Ones(1, Eigen::Index(cls.size()));
    for (std::size_t i = 0; i < config_.aggregator_layers; ++i)
        x = transformer_layer(t, x, "agg." + std::to_string(i), key_mask, dropout);

    Eigen::VectorXd row_mask = Eigen::VectorXd::Ones(Eigen::Index(cls.size()));
    tape::Var pooled = tape::masked_maxpool_rows(x, row_mask);
    return tape::add(tape::matmul(pooled, t.param(parameter("head.w"))),
                     t.param(parameter("head.b")));
}

std::vector<double> Model::state() const {
    std::vector<double> out;
    for (const auto& p : params_)
        out.insert(out.end(), p->value.data(), p->value.data() + p->value.size());
    return out;
}

void Model::restore(const std::vector<double>& state) {
    std::size_t total = 0;
    for (const auto& p : params_) total += std::size_t(p->value.size());
    if (state.size() != total) throw Error(ErrorCode::Invalid, "model state size mismatch");
    std::size_t at = 0;
    for (auto& p : params_) {
        std::copy(state.begin() + long(at), state.begin() + long(at + std::size_t(p->value.size())),
                  p->value.data());
        at += std::size_t(p->value.size());
    }
}

int predict_label(const Eigen::MatrixXd& logits) {
    if (logits.rows() != 1 || logits.cols() != 2)
        throw Error(ErrorCode::Invalid, "predict_label needs 1 x 2 logits");
    return logits(0, 1) > logits(0, 0) ? 1 : 0;
}

namespace {

constexpr char kMagic[9] = "LJCKPT01";

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw Error(ErrorCode::Parse, "truncated checkpoint: " + path);
    return value;
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint: " + path);
    out.write(kMagic, 8);
    auto params = model.parameters();
    write_raw(out, std::uint64_t(params.size()));
    for (auto* p : params) {
        write_raw(out, std::uint32_t(p->name.size()));
        out.write(p->name.data(), long(p->name.size()));
        write_raw(out, std::uint32_t(p->value.rows()));
        write_raw(out, std::uint32_t(p->value.cols()));
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  long(sizeof(double)) * p->value.size());
    }
    if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint: " + path);
}

void load_checkpoint(Model& model, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw Error(ErrorCode::Parse, "not a checkpoint file: " + path);

    auto params = model.parameters();
    auto count = read_raw<std::uint64_t>(in, path);
    if (count != params.size())
        throw Error(ErrorCode::Invalid, "checkpoint parameter count mismatch: " + path);
    for (auto* p : params) {
        auto name_len = read_raw<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), long(name_len));
        if (!in) throw Error(ErrorCode::Parse, "truncated checkpoint: " + path);
        if (name != p->name)
            throw Error(ErrorCode::Invalid,
                        "checkpoint parameter mismatch: expected " + p->name + ", found " + name);
        auto rows = read_raw<std::uint32_t>(in, path);
        auto cols = read_raw<std::uint32_t>(in, path);
        if (Eigen::Index(rows) != p->value.rows() || Eigen::Index(cols) != p->value.cols())
            throw Error(ErrorCode::Invalid, "checkpoint shape mismatch for " + p->name);
        in.read(reinterpret_cast<char*>(p->value.data()), long(sizeof(double)) * p->value.size());
        if (!in) throw Error(ErrorCode::Parse, "truncated checkpoint: " + path);
    }
}

}  // namespace lexjudge::model
