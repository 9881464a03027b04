#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lexjudge/corpus.hpp"

namespace lexjudge::translator {

class Backend {
  public:
    virtual ~Backend() = default;
    virtual std::vector<std::string> translate(const std::vector<std::string>& texts,
                                               corpus::Language source,
                                               corpus::Language target) = 0;
};

// Deterministic stand-in: prefixes each text with the target language marker.
class MockBackend : public Backend {
  public:
    std::vector<std::string> translate(const std::vector<std::string>& texts,
                                       corpus::Language source, corpus::Language target) override;
    std::size_t calls() const { return calls_.load(); }

  private:
    std::atomic<std::size_t> calls_{0};
};

// POSTs {texts, source, target} as JSON and expects {translations} back.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(std::string endpoint);
    std::vector<std::string> translate(const std::vector<std::string>& texts,
                                       corpus::Language source, corpus::Language target) override;

  private:
    std::string base_;
    std::string path_;
};

// Append-only JSONL cache under <root>/<src>-<tgt>.jsonl, keyed by case id,
// language pair and model tag. A torn final line is treated as an interrupted
// append and dropped; corruption anywhere else is an error.
class TranslationCache {
  public:
    explicit TranslationCache(std::string root);

    std::optional<std::string> lookup(const std::string& case_id, corpus::Language source,
                                      corpus::Language target, const std::string& model_tag);
    void store(const std::string& case_id, corpus::Language source, corpus::Language target,
               const std::string& model_tag, const std::string& text);

  private:
    struct Shard {
        bool loaded = false;
        std::map<std::string, std::string> entries;  // "<id>\n<model_tag>" -> text
    };
    Shard& shard(corpus::Language source, corpus::Language target);
    std::string shard_path(corpus::Language source, corpus::Language target) const;

    std::string root_;
    std::map<std::pair<int, int>, Shard> shards_;
    std::mutex mutex_;
};

struct ClientOptions {
    std::size_t batch_size = 16;
    std::size_t parallelism = 4;
    std::size_t max_attempts = 3;
    double backoff_base_seconds = 1.0;
    std::string model_tag = "mock-mt-1";
};

// Batches texts, consults the cache, retries transient backend failures with
// exponential backoff, and runs up to `parallelism` batches concurrently.
class Client {
  public:
    Client(Backend& backend, TranslationCache* cache, ClientOptions options);

    std::vector<std::string> translate_texts(const std::vector<std::string>& ids,
                                             const std::vector<std::string>& texts,
                                             corpus::Language source, corpus::Language target);
    const ClientOptions& options() const { return options_; }

  private:
    Backend& backend_;
    TranslationCache* cache_;
    ClientOptions options_;
};

}  // namespace lexjudge::translator
