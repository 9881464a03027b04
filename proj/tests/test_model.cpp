#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "lexjudge/error.hpp"
#include "lexjudge/model.hpp"
#include "lexjudge/rng.hpp"
#include "lexjudge/util.hpp"

using namespace lexjudge;
using namespace lexjudge::model;

namespace {

ModelConfig tiny_config() {
    ModelConfig mc;
    mc.vocab_size = 60;
    mc.hidden = 16;
    mc.layers = 1;
    mc.heads = 2;
    mc.ffn = 32;
    mc.aggregator_layers = 1;
    mc.blocking.block_length = 8;
    mc.blocking.max_blocks = 3;
    mc.dropout = 0.0;
    mc.adapter_reduction = 4;
    return mc;
}

std::string words(std::size_t count, const char* stem = "tok") {
    std::string text;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) text += ' ';
        text += stem;
        text += std::to_string(i % 17);
    }
    return text;
}

}  // namespace

TEST_CASE("tokenizer reserves control ids and stays in range") {
    Tokenizer tok{50};
    auto ids = tok.encode("alpha beta gamma alpha");
    REQUIRE(ids.size() == 4);
    CHECK(ids[0] == ids[3]);  // same token, same id
    for (int id : ids) {
        CHECK(id >= 3);
        CHECK(id < 50);
    }
    CHECK(tok.encode("").empty());
    CHECK(tok.encode("  spaced   out  ").size() == 2);
}

TEST_CASE("tokenize_blocks wraps real blocks and pads with maskless pad blocks") {
    Tokenizer tok{60};
    BlockingConfig bc{8, 3};  // capacity 6 content tokens per block

    SUBCASE("short text: one real block, right padded") {
        auto batch = tokenize_blocks(tok, bc, words(4));
        REQUIRE(batch.blocks.size() == 3);
        CHECK(batch.block_mask == std::vector<int>{1, 0, 0});
        const auto& b0 = batch.blocks[0];
        REQUIRE(b0.size() == 8);
        CHECK(b0[0] == Tokenizer::kCls);
        CHECK(b0[5] == Tokenizer::kSep);
        CHECK(b0[6] == Tokenizer::kPad);
        CHECK(b0[7] == Tokenizer::kPad);
        for (std::size_t j = 1; j < 3; ++j)
            for (int id : batch.blocks[j]) CHECK(id == Tokenizer::kPad);  // no CLS, no SEP
    }

    SUBCASE("exact fill: all blocks real") {
        auto batch = tokenize_blocks(tok, bc, words(18));
        CHECK(batch.block_mask == std::vector<int>{1, 1, 1});
        for (const auto& block : batch.blocks) {
            CHECK(block.front() == Tokenizer::kCls);
            CHECK(std::count(block.begin(), block.end(), Tokenizer::kSep) == 1);
        }
    }

    SUBCASE("overflow truncates to max_blocks") {
        auto batch = tokenize_blocks(tok, bc, words(50));
        CHECK(batch.block_mask == std::vector<int>{1, 1, 1});
        CHECK(batch.blocks.size() == 3);
    }

    SUBCASE("empty text still yields one real block") {
        auto batch = tokenize_blocks(tok, bc, "");
        CHECK(batch.block_mask == std::vector<int>{1, 0, 0});
        CHECK(batch.blocks[0][0] == Tokenizer::kCls);
        CHECK(batch.blocks[0][1] == Tokenizer::kSep);
    }

    SUBCASE("partial second block") {
        auto batch = tokenize_blocks(tok, bc, words(7));
        CHECK(batch.block_mask == std::vector<int>{1, 1, 0});
        CHECK(batch.blocks[1][0] == Tokenizer::kCls);
        CHECK(batch.blocks[1][2] == Tokenizer::kSep);  // one content token spills over
    }
}

TEST_CASE("tokenize_blocks validates the blocking config") {
    Tokenizer tok{60};
    CHECK_THROWS_AS(tokenize_blocks(tok, BlockingConfig{2, 3}, "a"), Error);
    CHECK_THROWS_AS(tokenize_blocks(tok, BlockingConfig{8, 0}, "a"), Error);
}

TEST_CASE("pad blocks cannot influence the logits") {
    auto mc = tiny_config();
    Model net(mc, 11);
    Tokenizer tok{mc.vocab_size};
    Rng scrambler(123);

    for (int trial = 0; trial < 20; ++trial) {
        auto batch = tokenize_blocks(tok, mc.blocking, words(1 + std::size_t(trial) % 6));
        tape::Tape t0;
        Eigen::MatrixXd base = t0.value(net.forward(t0, batch, nullptr));

        auto scrambled = batch;
        bool any_pad = false;
        for (std::size_t j = 0; j < scrambled.blocks.size(); ++j) {
            if (scrambled.block_mask[j] != 0) continue;
            any_pad = true;
            for (auto& id : scrambled.blocks[j])
                id = int(scrambler.uniform_int(std::uint64_t(mc.vocab_size)));
        }
        REQUIRE(any_pad);
        tape::Tape t1;
        Eigen::MatrixXd poked = t1.value(net.forward(t1, scrambled, nullptr));
        CHECK((poked - base).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("forward is deterministic in eval mode and seeded dropout repeats") {
    auto mc = tiny_config();
    mc.dropout = 0.1;
    Model net(mc, 4);
    Tokenizer tok{mc.vocab_size};
    auto batch = tokenize_blocks(tok, mc.blocking, words(10));

    tape::Tape t1, t2;
    Eigen::MatrixXd a = t1.value(net.forward(t1, batch, nullptr));
    Eigen::MatrixXd b = t2.value(net.forward(t2, batch, nullptr));
    CHECK(a == b);

    Rng d1 = Rng::stream(9, "dropout");
    Rng d2 = Rng::stream(9, "dropout");
    tape::Tape t3, t4;
    Eigen::MatrixXd c = t3.value(net.forward(t3, batch, &d1));
    Eigen::MatrixXd d = t4.value(net.forward(t4, batch, &d2));
    CHECK(c == d);
}

TEST_CASE("parameter names classify into a disjoint cover") {
    CHECK(classify("enc.0.ffn.adapter.down") == ParamGroup::Adapter);
    CHECK(classify("agg.1.norm2.gamma") == ParamGroup::LayerNorm);
    CHECK(classify("embed.norm.beta") == ParamGroup::LayerNorm);
    CHECK(classify("head.w") == ParamGroup::Head);
    CHECK(classify("head.b") == ParamGroup::Head);
    CHECK(classify("enc.0.attn.wq") == ParamGroup::Backbone);
    CHECK(classify("embed.token") == ParamGroup::Backbone);

    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model net(mc, 1);
    std::size_t scalars = 0;
    for (auto* p : net.parameters()) scalars += std::size_t(p->value.size());
    auto summary = net.partition();
    CHECK(summary.total == scalars);
    CHECK(summary.adapter + summary.layernorm + summary.head + summary.backbone == summary.total);
}

TEST_CASE("adapter zero init leaves the forward untouched") {
    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model adapted(mc, 21);

    auto base_config = mc;
    base_config.adapters_enabled = false;
    Model base(base_config, 22);
    for (auto* p : base.parameters()) p->value = adapted.parameter(p->name).value;

    Tokenizer tok{mc.vocab_size};
    for (std::size_t len : {0u, 3u, 9u, 15u}) {
        auto batch = tokenize_blocks(tok, mc.blocking, words(len));
        tape::Tape ta, tb;
        Eigen::MatrixXd with = ta.value(adapted.forward(ta, batch, nullptr));
        Eigen::MatrixXd without = tb.value(base.forward(tb, batch, nullptr));
        CHECK((with - without).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("adapter mode trains exactly adapters, layer norms, and the head") {
    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model net(mc, 31);
    net.set_train_mode(TrainMode::AdapterOnly);

    std::set<std::string> trainable;
    for (auto* p : net.trainable_parameters()) trainable.insert(p->name);
    std::set<std::string> expected;
    for (auto* p : net.parameters())
        if (classify(p->name) != ParamGroup::Backbone) expected.insert(p->name);
    CHECK(trainable == expected);

    std::size_t trainable_scalars = 0;
    for (auto* p : net.trainable_parameters()) trainable_scalars += std::size_t(p->value.size());
    auto summary = net.partition();
    CHECK(summary.trainable == trainable_scalars);
    CHECK(summary.trainable_fraction < 0.5);  // tiny config; the desk default is tighter

    ModelConfig desk;  // default desk configuration
    desk.adapters_enabled = true;
    Model desk_net(desk, 1);
    desk_net.set_train_mode(TrainMode::AdapterOnly);
    CHECK(desk_net.partition().trainable_fraction < 0.10);
}

TEST_CASE("adapter-only step leaves every backbone parameter bit-identical") {
    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model net(mc, 41);
    net.set_train_mode(TrainMode::AdapterOnly);

    std::vector<std::pair<std::string, Eigen::MatrixXd>> before;
    for (auto* p : net.parameters())
        if (classify(p->name) == ParamGroup::Backbone) before.emplace_back(p->name, p->value);

    Tokenizer tok{mc.vocab_size};
    auto batch = tokenize_blocks(tok, mc.blocking, words(9));
    auto trainable = net.trainable_parameters();
    for (auto* p : trainable) p->zero_grad();
    tape::Tape t;
    tape::Var loss = tape::smoothed_cross_entropy(net.forward(t, batch, nullptr), {1}, 0.1);
    t.backward(loss);
    bool moved = false;
    for (auto* p : trainable) {
        p->value -= 0.05 * p->grad;
        if (p->grad.cwiseAbs().maxCoeff() > 0.0) moved = true;
    }
    CHECK(moved);

    for (const auto& [name, value] : before) {
        const auto& now = net.parameter(name).value;
        REQUIRE(now.size() == value.size());
        for (Eigen::Index i = 0; i < value.size(); ++i) CHECK(now(i) == value(i));
    }
}

TEST_CASE("adapter mode requires adapters to exist") {
    auto mc = tiny_config();
    Model net(mc, 5);
    CHECK_THROWS_AS(net.set_train_mode(TrainMode::AdapterOnly), Error);
}

TEST_CASE("adapter reduction must divide the hidden size") {
    auto mc = tiny_config();
    mc.adapter_reduction = 5;
    mc.adapters_enabled = true;
    CHECK_THROWS_AS(Model(mc, 1), Error);
}

TEST_CASE("full-model gradients match finite differences") {
    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model net(mc, 3);
    Tokenizer tok{mc.vocab_size};
    auto batch_a = tokenize_blocks(tok, mc.blocking, words(9, "fir"));
    auto batch_b = tokenize_blocks(tok, mc.blocking, words(4, "sec"));

    auto build = [&](tape::Tape& t) {
        tape::Var logits = tape::stack_rows(
            {net.forward(t, batch_a, nullptr), net.forward(t, batch_b, nullptr)});
        return tape::smoothed_cross_entropy(logits, {1, 0}, 0.1);
    };
    auto report = tape::gradcheck(net.parameters(), build, 1e-5, 23);
    CHECK(report.entries_checked > 200);
    CHECK(report.max_rel_diff < 1e-5);
}

TEST_CASE("predict_label breaks ties toward dismissal") {
    Eigen::MatrixXd logits(1, 2);
    logits << 0.4, 0.4;
    CHECK(predict_label(logits) == 0);
    logits << 0.1, 0.7;
    CHECK(predict_label(logits) == 1);
    logits << 0.9, -0.2;
    CHECK(predict_label(logits) == 0);
}

TEST_CASE("state capture and restore round trips") {
    auto mc = tiny_config();
    Model net(mc, 8);
    auto snapshot = net.state();
    Tokenizer tok{mc.vocab_size};
    auto batch = tokenize_blocks(tok, mc.blocking, words(6));
    tape::Tape t0;
    Eigen::MatrixXd before = t0.value(net.forward(t0, batch, nullptr));

    for (auto* p : net.parameters()) p->value.array() += 0.25;
    tape::Tape t1;
    CHECK((t1.value(net.forward(t1, batch, nullptr)) - before).cwiseAbs().maxCoeff() > 1e-8);

    net.restore(snapshot);
    tape::Tape t2;
    CHECK(t2.value(net.forward(t2, batch, nullptr)) == before);
}

TEST_CASE("checkpoints round trip through disk") {
    auto dir = std::filesystem::temp_directory_path() / "lexjudge_model_ckpt";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto path = (dir / "model.ckpt").string();

    auto mc = tiny_config();
    mc.adapters_enabled = true;
    Model net(mc, 13);
    save_checkpoint(net, path);

    Model other(mc, 14);  // different init, same shapes
    load_checkpoint(other, path);
    for (auto* p : net.parameters()) {
        const auto& restored = other.parameter(p->name).value;
        for (Eigen::Index i = 0; i < p->value.size(); ++i) CHECK(restored(i) == p->value(i));
    }

    Model narrow(tiny_config(), 15);  // no adapters: parameter set differs
    CHECK_THROWS_AS(load_checkpoint(narrow, path), Error);

    util::write_text_file(dir / "junk.ckpt", "not a checkpoint");
    CHECK_THROWS_AS(load_checkpoint(other, (dir / "junk.ckpt").string()), Error);
    std::filesystem::remove_all(dir);
}
