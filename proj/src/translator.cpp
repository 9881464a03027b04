#include "lexjudge/translator.hpp"

#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "lexjudge/error.hpp"

namespace lexjudge::translator {

using nlohmann::json;

std::vector<std::string> MockBackend::translate(const std::vector<std::string>& texts,
                                                corpus::Language source,
                                                corpus::Language target) {
    (void)source;
    calls_.fetch_add(1);
    std::vector<std::string> out;
    out.reserve(texts.size());
    for (const auto& text : texts)
        out.push_back("⟦" + std::string(corpus::to_string(target)) + "⟧ " + text);
    return out;
}

HttpBackend::HttpBackend(std::string endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw Error(ErrorCode::Invalid, "translation endpoint needs a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base_ = endpoint;
        path_ = "/";
    } else {
        base_ = endpoint.substr(0, path_start);
        path_ = endpoint.substr(path_start);
    }
}

std::vector<std::string> HttpBackend::translate(const std::vector<std::string>& texts,
                                                corpus::Language source,
                                                corpus::Language target) {
    json body;
    body["texts"] = texts;
    body["source"] = corpus::to_string(source);
    body["target"] = corpus::to_string(target);

    httplib::Client client(base_);
    client.set_read_timeout(60, 0);
    auto res = client.Post(path_, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::Backend, "cannot reach translation endpoint " + base_ + path_);
    if (res->status != 200)
        throw Error(ErrorCode::Backend, "translation endpoint returned status " +
                                            std::to_string(res->status));
    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::Backend, "translation endpoint returned malformed JSON");
    }
    if (!parsed.contains("translations") || !parsed["translations"].is_array())
        throw Error(ErrorCode::Backend, "translation response lacks a translations array");
    std::vector<std::string> out;
    for (const auto& item : parsed["translations"]) {
        if (!item.is_string())
            throw Error(ErrorCode::Backend, "translation response holds a non-string entry");
        out.push_back(item.get<std::string>());
    }
    if (out.size() != texts.size())
        throw Error(ErrorCode::Backend, "translation response count mismatch");
    return out;
}

namespace {
constexpr char kKeySep = '\x1f';
}

TranslationCache::TranslationCache(std::string root) : root_(std::move(root)) {}

std::string TranslationCache::shard_path(corpus::Language source, corpus::Language target) const {
    return root_ + "/" + std::string(corpus::to_string(source)) + "-" +
           std::string(corpus::to_string(target)) + ".jsonl";
}

TranslationCache::Shard& TranslationCache::shard(corpus::Language source,
                                                 corpus::Language target) {
    Shard& s = shards_[{int(source), int(target)}];
    if (s.loaded) return s;
    s.loaded = true;

    std::string path = shard_path(source, target);
    std::ifstream in(path, std::ios::binary);
    if (!in) return s;  // nothing cached yet

    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t line_no = 0;
    std::size_t at = 0;
    while (at < content.size()) {
        std::size_t end = content.find('\n', at);
        if (end == std::string::npos) break;  // torn final append, drop it
        ++line_no;
        std::string line = content.substr(at, end - at);
        at = end + 1;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception&) {
            throw Error(ErrorCode::Parse,
                        "corrupt translation cache: " + path + ":" + std::to_string(line_no));
        }
        if (!record.contains("id") || !record.contains("model") || !record.contains("text"))
            throw Error(ErrorCode::Parse,
                        "corrupt translation cache: " + path + ":" + std::to_string(line_no));
        s.entries[record["id"].get<std::string>() + kKeySep + record["model"].get<std::string>()] =
            record["text"].get<std::string>();
    }
    return s;
}

std::optional<std::string> TranslationCache::lookup(const std::string& case_id,
                                                    corpus::Language source,
                                                    corpus::Language target,
                                                    const std::string& model_tag) {
    std::lock_guard<std::mutex> lock(mutex_);
    Shard& s = shard(source, target);
    auto it = s.entries.find(case_id + kKeySep + model_tag);
    if (it == s.entries.end()) return std::nullopt;
    return it->second;
}

void TranslationCache::store(const std::string& case_id, corpus::Language source,
                             corpus::Language target, const std::string& model_tag,
                             const std::string& text) {
    std::lock_guard<std::mutex> lock(mutex_);
    Shard& s = shard(source, target);
    s.entries[case_id + kKeySep + model_tag] = text;

    json record;
    record["id"] = case_id;
    record["source"] = corpus::to_string(source);
    record["target"] = corpus::to_string(target);
    record["model"] = model_tag;
    record["text"] = text;

    std::filesystem::create_directories(root_);
    std::string path = shard_path(source, target);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::Io, "cannot append to translation cache: " + path);
    out << record.dump() << "\n";  // one write per entry keeps lines whole
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "cannot append to translation cache: " + path);
}

Client::Client(Backend& backend, TranslationCache* cache, ClientOptions options)
    : backend_(backend), cache_(cache), options_(std::move(options)) {
    if (options_.batch_size == 0) throw Error(ErrorCode::Invalid, "batch size must be positive");
    if (options_.max_attempts == 0) throw Error(ErrorCode::Invalid, "max attempts must be positive");
}

std::vector<std::string> Client::translate_texts(const std::vector<std::string>& ids,
                                                 const std::vector<std::string>& texts,
                                                 corpus::Language source,
                                                 corpus::Language target) {
    if (ids.size() != texts.size())
        throw Error(ErrorCode::Invalid, "id and text counts differ");
    if (source == target)
        throw Error(ErrorCode::Invalid, "translation source and target languages must differ");
    std::vector<std::string> results(texts.size());

    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache_ != nullptr) {
            auto hit = cache_->lookup(ids[i], source, target, options_.model_tag);
            if (hit) {
                results[i] = std::move(*hit);
                continue;
            }
        }
        missing.push_back(i);
    }
    if (missing.empty()) return results;

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < missing.size(); at += options_.batch_size) {
        auto end = std::min(missing.size(), at + options_.batch_size);
        batches.emplace_back(missing.begin() + long(at), missing.begin() + long(end));
    }

    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::atomic<std::size_t> next{0};

    auto run_batch = [&](const std::vector<std::size_t>& batch) {
        std::vector<std::string> inputs;
        inputs.reserve(batch.size());
        for (std::size_t i : batch) inputs.push_back(texts[i]);

        std::vector<std::string> outputs;
        for (std::size_t attempt = 1;; ++attempt) {
            try {
                outputs = backend_.translate(inputs, source, target);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::Backend || attempt >= options_.max_attempts) throw;
                double delay = options_.backoff_base_seconds * double(1ull << (attempt - 1));
                if (delay > 0.0)
                    std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
        }
        for (std::size_t k = 0; k < batch.size(); ++k) {
            if (cache_ != nullptr)
                cache_->store(ids[batch[k]], source, target, options_.model_tag, outputs[k]);
            results[batch[k]] = std::move(outputs[k]);
        }
    };

    auto worker = [&]() {
        while (true) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            std::size_t index = next.fetch_add(1);
            if (index >= batches.size()) return;
            try {
                run_batch(batches[index]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    std::size_t threads = std::min(options_.parallelism, batches.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return results;
}

}  // namespace lexjudge::translator
