#include "lexjudge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "json.hpp"

#include "lexjudge/error.hpp"
#include "lexjudge/rng.hpp"
#include "lexjudge/util.hpp"

namespace lexjudge::trainer {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& context, const std::string& message) {
    throw Error(ErrorCode::Parse, context + ": " + message);
}

void check_keys(const json& object, const std::set<std::string>& allowed,
                const std::string& context) {
    for (const auto& [key, _] : object.items())
        if (allowed.find(key) == allowed.end()) config_error(context, "unknown key \"" + key + "\"");
}

corpus::GroupFilter parse_filter(const json& object, const std::string& context) {
    check_keys(object,
               {"languages", "regions", "legal_areas", "jurisdictions", "max_year",
                "include_mt_swiss", "include_mt_foreign"},
               context);
    corpus::GroupFilter filter;
    try {
        if (object.contains("languages")) {
            filter.languages.emplace();
            for (const auto& item : object["languages"])
                filter.languages->insert(corpus::parse_language(item.get<std::string>()));
        }
        if (object.contains("regions")) {
            filter.regions.emplace();
            for (const auto& item : object["regions"])
                filter.regions->insert(corpus::parse_region(item.get<std::string>()));
        }
        if (object.contains("legal_areas")) {
            filter.legal_areas.emplace();
            for (const auto& item : object["legal_areas"])
                filter.legal_areas->insert(corpus::parse_legal_area(item.get<std::string>()));
        }
        if (object.contains("jurisdictions")) {
            filter.jurisdictions.emplace();
            for (const auto& item : object["jurisdictions"])
                filter.jurisdictions->insert(corpus::parse_jurisdiction(item.get<std::string>()));
        }
        if (object.contains("max_year") && !object["max_year"].is_null())
            filter.max_year = object["max_year"].get<int>();
    } catch (const json::exception& e) {
        config_error(context, e.what());
    } catch (const Error& e) {
        config_error(context, e.what());
    }
    return filter;
}

model::ModelConfig parse_model_config(const json& object, const std::string& context) {
    check_keys(object,
               {"vocab_size", "hidden", "layers", "heads", "ffn", "aggregator_layers",
                "block_length", "max_blocks", "dropout", "adapter_reduction", "label_smoothing"},
               context);
    model::ModelConfig mc;
    try {
        if (object.contains("vocab_size")) mc.vocab_size = object["vocab_size"].get<std::size_t>();
        if (object.contains("hidden")) mc.hidden = object["hidden"].get<std::size_t>();
        if (object.contains("layers")) mc.layers = object["layers"].get<std::size_t>();
        if (object.contains("heads")) mc.heads = object["heads"].get<std::size_t>();
        if (object.contains("ffn")) mc.ffn = object["ffn"].get<std::size_t>();
        else mc.ffn = 4 * mc.hidden;
        if (object.contains("aggregator_layers"))
            mc.aggregator_layers = object["aggregator_layers"].get<std::size_t>();
        if (object.contains("block_length"))
            mc.blocking.block_length = object["block_length"].get<std::size_t>();
        if (object.contains("max_blocks"))
            mc.blocking.max_blocks = object["max_blocks"].get<std::size_t>();
        if (object.contains("dropout")) mc.dropout = object["dropout"].get<double>();
        if (object.contains("adapter_reduction"))
            mc.adapter_reduction = object["adapter_reduction"].get<std::size_t>();
        if (object.contains("label_smoothing"))
            mc.label_smoothing = object["label_smoothing"].get<double>();
    } catch (const json::exception& e) {
        config_error(context, e.what());
    }
    return mc;
}

corpus::Dataset load_split(const std::string& path, corpus::Split split) {
    return corpus::load_corpus(path, split);
}

std::vector<model::BlockBatch> tokenize_all(const corpus::Dataset& dataset,
                                            const model::Tokenizer& tokenizer,
                                            const model::BlockingConfig& blocking) {
    std::vector<model::BlockBatch> out;
    out.reserve(dataset.size());
    for (const auto& c : dataset.cases())
        out.push_back(model::tokenize_blocks(tokenizer, blocking, c.text));
    return out;
}

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t t = 0;
    std::vector<Eigen::MatrixXd> m, v;

    explicit Adam(const std::vector<tape::Parameter*>& params) {
        for (auto* p : params) {
            m.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
            v.push_back(Eigen::MatrixXd::Zero(p->value.rows(), p->value.cols()));
        }
    }

    void step(const std::vector<tape::Parameter*>& params, double lr) {
        ++t;
        double c1 = 1.0 - std::pow(beta1, double(t));
        double c2 = 1.0 - std::pow(beta2, double(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            tape::Parameter& p = *params[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * p.grad;
            v[i] = beta2 * v[i] + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
            Eigen::ArrayXXd mhat = m[i].array() / c1;
            Eigen::ArrayXXd vhat = v[i].array() / c2;
            p.value.array() -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& context) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        config_error(context, e.what());
    }
    check_keys(doc,
               {"name", "mode", "train", "dev", "oversample", "learning_rates", "epochs",
                "batch_size", "patience", "warmup_fraction", "model"},
               context);

    ExperimentConfig config;
    try {
        config.name = doc.at("name").get<std::string>();
        if (doc.contains("mode")) {
            std::string mode = doc["mode"].get<std::string>();
            if (mode == "adapter") config.mode = model::TrainMode::AdapterOnly;
            else if (mode == "full") config.mode = model::TrainMode::Full;
            else config_error(context, "unknown mode \"" + mode + "\"");
        }
        if (doc.contains("train")) {
            config.train_filter = parse_filter(doc["train"], context + ": train");
            if (doc["train"].contains("include_mt_swiss"))
                config.include_mt_swiss = doc["train"]["include_mt_swiss"].get<bool>();
            if (doc["train"].contains("include_mt_foreign"))
                config.include_mt_foreign = doc["train"]["include_mt_foreign"].get<bool>();
        }
        if (doc.contains("dev")) config.dev_filter = parse_filter(doc["dev"], context + ": dev");
        if (doc.contains("oversample")) config.oversample = doc["oversample"].get<bool>();
        if (doc.contains("learning_rates")) {
            config.learning_rates.clear();
            for (const auto& item : doc["learning_rates"])
                config.learning_rates.push_back(item.get<double>());
            if (config.learning_rates.empty())
                config_error(context, "learning_rates must not be empty");
        }
        if (doc.contains("epochs")) config.epochs = doc["epochs"].get<std::size_t>();
        if (doc.contains("batch_size")) config.batch_size = doc["batch_size"].get<std::size_t>();
        if (doc.contains("patience")) config.patience = doc["patience"].get<std::size_t>();
        if (doc.contains("warmup_fraction"))
            config.warmup_fraction = doc["warmup_fraction"].get<double>();
        if (doc.contains("model")) config.model = parse_model_config(doc["model"], context + ": model");
    } catch (const json::exception& e) {
        config_error(context, e.what());
    }
    if (config.epochs == 0) config_error(context, "epochs must be positive");
    if (config.batch_size == 0) config_error(context, "batch_size must be positive");
    if (config.patience == 0) config_error(context, "patience must be positive");
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(util::read_text_file(path), path);
}

CorpusBundle load_bundle(const std::string& corpus_root) {
    CorpusBundle bundle;
    bundle.train = load_split(corpus_root + "/train.jsonl", corpus::Split::Train);
    bundle.dev = load_split(corpus_root + "/dev.jsonl", corpus::Split::Dev);
    bundle.test = load_split(corpus_root + "/test.jsonl", corpus::Split::Test);
    std::string augmented = corpus_root + "/augmented/train_augmented.jsonl";
    if (std::filesystem::exists(augmented))
        bundle.train_augmented = load_split(augmented, corpus::Split::Train);
    std::string foreign = corpus_root + "/augmented/mt_foreign.jsonl";
    if (std::filesystem::exists(foreign))
        bundle.mt_foreign = load_split(foreign, corpus::Split::Train);
    return bundle;
}

corpus::Dataset build_training_set(const CorpusBundle& bundle, const ExperimentConfig& config,
                                   std::uint64_t seed) {
    std::vector<corpus::Case> combined;
    for (const auto& c : bundle.train.cases())
        if (config.train_filter.matches(c)) combined.push_back(c);

    if (config.include_mt_swiss) {
        if (!bundle.train_augmented)
            throw Error(ErrorCode::State, "augmented corpus is not materialized; run prepare");
        for (const auto& c : bundle.train_augmented->cases())
            if (c.provenance == corpus::Provenance::Mt && config.train_filter.matches(c))
                combined.push_back(c);
    }
    if (config.include_mt_foreign) {
        if (!bundle.mt_foreign)
            throw Error(ErrorCode::State, "foreign mt corpus is not materialized; run prepare");
        for (const auto& c : bundle.mt_foreign->cases())
            if (config.train_filter.matches(c)) combined.push_back(c);
    }
    corpus::Dataset dataset(std::move(combined), corpus::Split::Train);
    if (dataset.size() == 0) throw Error(ErrorCode::Invalid, "training set is empty");
    if (config.oversample) return corpus::oversample(dataset, seed);
    return dataset;
}

evaluator::PredictionSet predict_dataset(model::Model& m, const corpus::Dataset& dataset) {
    model::Tokenizer tokenizer{m.config().vocab_size};
    evaluator::PredictionSet preds;
    preds.reserve(dataset.size());
    for (const auto& c : dataset.cases()) {
        tape::Tape t;
        auto batch = model::tokenize_blocks(tokenizer, m.config().blocking, c.text);
        tape::Var logits = m.forward(t, batch, nullptr);
        evaluator::PredictionRecord record;
        record.id = c.id;
        record.gold = c.label;
        record.pred = model::predict_label(t.value(logits));
        record.language = c.language;
        record.region = c.region;
        record.legal_area = c.legal_area;
        preds.push_back(std::move(record));
    }
    return preds;
}

TrainResult train_once(const ExperimentConfig& config, const CorpusBundle& bundle,
                       double learning_rate, std::uint64_t seed, const TrainHooks* hooks) {
    corpus::Dataset training = build_training_set(bundle, config, seed);

    corpus::GroupFilter dev_filter;
    if (config.dev_filter) {
        dev_filter = *config.dev_filter;
    } else {
        dev_filter.languages = config.train_filter.languages;
    }
    corpus::Dataset dev = corpus::apply_filter(bundle.dev, dev_filter);
    if (dev.size() == 0) throw Error(ErrorCode::Invalid, "dev set is empty under the dev filter");

    model::ModelConfig mc = config.model;
    mc.adapters_enabled = config.mode == model::TrainMode::AdapterOnly;
    model::Model net(mc, seed);
    net.set_train_mode(config.mode);
    auto trainable = net.trainable_parameters();

    model::Tokenizer tokenizer{mc.vocab_size};
    auto train_batches = tokenize_all(training, tokenizer, mc.blocking);
    auto labels_of = [](const corpus::Dataset& d) {
        std::vector<int> out;
        out.reserve(d.size());
        for (const auto& c : d.cases()) out.push_back(c.label);
        return out;
    };
    std::vector<int> train_labels = labels_of(training);

    std::size_t n = training.size();
    std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    std::size_t total_steps = steps_per_epoch * config.epochs;
    std::size_t warmup_steps =
        std::max<std::size_t>(1, std::size_t(std::ceil(config.warmup_fraction * double(total_steps))));

    Adam adam(trainable);
    Rng shuffle_rng = Rng::stream(seed, "shuffle");
    Rng dropout_rng = Rng::stream(seed, "dropout");

    TrainResult result;
    double best = -1.0;
    std::vector<double> best_state;
    std::size_t bad_evals = 0;
    std::size_t step = 0;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        result.epochs_run = epoch;
        shuffle_rng.shuffle(order);
        for (std::size_t at = 0; at < n; at += config.batch_size) {
            std::size_t end = std::min(n, at + config.batch_size);
            tape::Tape t;
            std::vector<tape::Var> logit_rows;
            std::vector<int> labels;
            for (std::size_t i = at; i < end; ++i) {
                logit_rows.push_back(net.forward(t, train_batches[order[i]], &dropout_rng));
                labels.push_back(train_labels[order[i]]);
            }
            tape::Var stacked = tape::stack_rows(logit_rows);
            if (!t.value(stacked).allFinite())
                throw TrainingDiverged(int(epoch), learning_rate, "logits are not finite");
            tape::Var loss = tape::smoothed_cross_entropy(stacked, labels, mc.label_smoothing);
            double loss_value = t.value(loss)(0, 0);
            if (!std::isfinite(loss_value))
                throw TrainingDiverged(int(epoch), learning_rate, "loss is not finite");
            for (auto* p : trainable) p->zero_grad();
            t.backward(loss);
            ++step;
            double lr_now =
                learning_rate * std::min(1.0, double(step) / double(warmup_steps));
            adam.step(trainable, lr_now);
        }
        for (auto* p : trainable)
            if (!p->value.allFinite())
                throw TrainingDiverged(int(epoch), learning_rate,
                                       "parameter " + p->name + " is not finite");

        double measured = evaluator::macro_f1(predict_dataset(net, dev));
        double score = measured;
        if (hooks != nullptr && hooks->dev_score_override)
            score = hooks->dev_score_override(epoch, measured);
        result.history.push_back({epoch, score});
        if (hooks != nullptr && hooks->after_epoch) hooks->after_epoch(epoch, net);

        if (score > best) {
            best = score;
            result.best_epoch = epoch;
            best_state = net.state();
            bad_evals = 0;
        } else {
            ++bad_evals;
            if (bad_evals >= config.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    net.restore(best_state);
    result.best_dev_macro_f1 = best;
    result.test_predictions = predict_dataset(net, bundle.test);
    result.test_macro_f1 = evaluator::macro_f1(result.test_predictions);
    return result;
}

std::size_t select_learning_rate(const std::vector<LrOutcome>& grid) {
    bool found = false;
    std::size_t best_index = 0;
    double best_mean = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i].diverged || grid[i].dev_scores.empty()) continue;
        double mean = 0.0;
        for (double s : grid[i].dev_scores) mean += s;
        mean /= double(grid[i].dev_scores.size());
        if (!found || mean > best_mean) {
            found = true;
            best_index = i;
            best_mean = mean;
        }
    }
    if (!found) throw Error(ErrorCode::State, "every learning rate diverged");
    return best_index;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const CorpusBundle& bundle,
                                const std::vector<std::uint64_t>& seeds,
                                const TrainHooks* hooks) {
    if (seeds.empty()) throw Error(ErrorCode::Invalid, "run_experiment needs seeds");
    ExperimentResult result;
    result.name = config.name;
    for (double lr : config.learning_rates) {
        LrOutcome outcome;
        outcome.learning_rate = lr;
        for (std::uint64_t seed : seeds) {
            try {
                TrainResult run = train_once(config, bundle, lr, seed, hooks);
                outcome.dev_scores.push_back(run.best_dev_macro_f1);
                outcome.runs.push_back(std::move(run));
            } catch (const TrainingDiverged&) {
                outcome.diverged = true;
                outcome.dev_scores.clear();
                outcome.runs.clear();
                break;
            }
        }
        result.grid.push_back(std::move(outcome));
    }
    result.selected_index = select_learning_rate(result.grid);
    result.selected_lr = result.grid[result.selected_index].learning_rate;
    return result;
}

}  // namespace lexjudge::trainer
