#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "agentcritic/checkpoint.hpp"
#include "agentcritic/error.hpp"
#include "agentcritic/neuralnet.hpp"
#include "agentcritic/rng.hpp"
#include "json.hpp"

using namespace agentcritic;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Loop-by-loop GRU, written against the gate equations only.
std::vector<double> naive_gru(const ParamSet& p, const std::string& emb, const std::string& pre,
                              const std::vector<int>& toks, std::size_t E, std::size_t H) {
    const Tensor& e = p.at(emb);
    const Tensor& wih = p.at(pre + ".w_ih");
    const Tensor& whh = p.at(pre + ".w_hh");
    const Tensor& bih = p.at(pre + ".b_ih");
    const Tensor& bhh = p.at(pre + ".b_hh");
    std::vector<double> h(H, 0.0);
    for (int tok : toks) {
        std::vector<double> gi(3 * H), gh(3 * H);
        for (std::size_t r = 0; r < 3 * H; ++r) {
            gi[r] = bih[r];
            for (std::size_t c = 0; c < E; ++c) gi[r] += wih[r * E + c] * e[std::size_t(tok) * E + c];
            gh[r] = bhh[r];
            for (std::size_t c = 0; c < H; ++c) gh[r] += whh[r * H + c] * h[c];
        }
        std::vector<double> nh(H);
        for (std::size_t j = 0; j < H; ++j) {
            const double rg = sigmoid(gi[j] + gh[j]);
            const double zg = sigmoid(gi[H + j] + gh[H + j]);
            const double ng = std::tanh(gi[2 * H + j] + rg * gh[2 * H + j]);
            nh[j] = (1 - zg) * ng + zg * h[j];
        }
        h = nh;
    }
    return h;
}

FieldNetwork small_net(std::vector<Field> fields, std::size_t H = 5) {
    return FieldNetwork(FieldNetSpec{NetDims{50, 4, H}, std::move(fields)});
}

} // namespace

TEST(Tokenize, MatchesGoldenIds) {
    std::ifstream in(std::string(GOLDEN_DIR) + "/tokenize.json");
    ASSERT_TRUE(in);
    const auto j = nlohmann::json::parse(in);
    for (const auto& c : j["cases"]) {
        const TokenSeq got = tokenize(c["text"].get<std::string>(), c["vocab_size"].get<std::size_t>());
        EXPECT_EQ(got, c["ids"].get<TokenSeq>()) << c["text"];
    }
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("   ").empty()); }

TEST(TensorTest, RejectsBadShapes) {
    EXPECT_THROW(Tensor(std::vector<std::size_t>{}), InvalidArgument);
    EXPECT_THROW(Tensor({3, 0}), InvalidArgument);
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.cols(), 3u);
    EXPECT_EQ(t[5], 1.5);
}

TEST(ParamSetTest, DuplicateNameRejected) {
    ParamSet p;
    p.add("a", Tensor({2}));
    EXPECT_THROW(p.add("a", Tensor({2})), InvalidArgument);
}

TEST(Affine, ForwardAndBackward) {
    Tensor w({2, 3});
    Tensor b({2});
    const double wv[] = {1, 2, 3, 4, 5, 6};
    for (int i = 0; i < 6; ++i) w[i] = wv[i];
    b[0] = 0.5;
    b[1] = -1;
    Eigen::VectorXd x(3);
    x << 1, 0, -1;
    const Eigen::VectorXd y = affine_forward(w, b, x);
    EXPECT_DOUBLE_EQ(y[0], 1 - 3 + 0.5);
    EXPECT_DOUBLE_EQ(y[1], 4 - 6 - 1);
    Tensor dw({2, 3}), db({2});
    Eigen::VectorXd dy(2);
    dy << 1, 2;
    const Eigen::VectorXd dx = affine_backward(w, x, dy, dw, db);
    EXPECT_DOUBLE_EQ(dx[0], 1 * 1 + 2 * 4);
    EXPECT_DOUBLE_EQ(dx[2], 1 * 3 + 2 * 6);
    EXPECT_DOUBLE_EQ(dw[3], 2 * 1);
    EXPECT_DOUBLE_EQ(db[1], 2);
}

TEST(Gru, MatchesNaiveRecurrence) {
    const FieldNetwork net = small_net({Field::task, Field::action});
    const ParamSet p = net.init(17);
    const std::vector<int> toks = {3, 41, 3, 0, 7};
    const TokenSeq seq(toks.begin(), toks.end());
    const Eigen::VectorXd h = gru_encode(p, "embedding", FieldNetwork::gru_prefix(Field::action), seq);
    const auto ref = naive_gru(p, "embedding", FieldNetwork::gru_prefix(Field::action), toks, 4, 5);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(h[Eigen::Index(j)], ref[j], 1e-13);
}

TEST(Gru, EmptyAndOutOfRange) {
    const FieldNetwork net = small_net({Field::task});
    const ParamSet p = net.init(1);
    const std::string pre = FieldNetwork::gru_prefix(Field::task);
    EXPECT_EQ(gru_encode(p, "embedding", pre, TokenSeq{}).norm(), 0.0);
    EXPECT_THROW(gru_encode(p, "embedding", pre, TokenSeq{50}), InvalidArgument);
    EXPECT_THROW(gru_encode(p, "embedding", pre, TokenSeq{-1}), InvalidArgument);
}

TEST(FieldNet, ParameterLayout) {
    const FieldNetwork net = small_net({Field::task, Field::state, Field::action}, 6);
    const ParamSet p = net.init(3);
    EXPECT_EQ(p.entry(0).first, "embedding");
    EXPECT_EQ(p.at("embedding").shape(), (std::vector<std::size_t>{50, 4}));
    EXPECT_EQ(p.at("gru.state.w_ih").shape(), (std::vector<std::size_t>{18, 4}));
    EXPECT_EQ(p.at("gru.state.w_hh").shape(), (std::vector<std::size_t>{18, 6}));
    EXPECT_EQ(p.at("fc1.weight").shape(), (std::vector<std::size_t>{6, 18}));
    EXPECT_EQ(p.at("fc2.weight").shape(), (std::vector<std::size_t>{1, 6}));
    EXPECT_EQ(p.entry(p.size() - 1).first, "fc2.bias");
}

TEST(FieldNet, InitBoundsAndDeterminism) {
    const FieldNetwork net = small_net({Field::task, Field::action}, 6);
    const ParamSet a = net.init(5);
    EXPECT_EQ(a, net.init(5));
    EXPECT_FALSE(a == net.init(6));
    // embed 4, hidden 6, two fields
    for (const auto& [name, t] : a) {
        double bound = 1 / std::sqrt(6.0);
        if (name == "embedding") bound = 1.0;
        else if (name.ends_with(".w_ih")) bound = 0.5;
        else if (name.rfind("fc1", 0) == 0) bound = 1 / std::sqrt(12.0);
        double seen = 0;
        for (double x : t.data()) {
            EXPECT_LE(std::abs(x), bound) << name;
            seen = std::max(seen, std::abs(x));
        }
        if (t.size() >= 24) EXPECT_GT(seen, 0.7 * bound) << name;
    }
}

TEST(FieldNet, ForwardMatchesNaiveHead) {
    const FieldNetwork net = small_net({Field::task, Field::action}, 3);
    const ParamSet p = net.init(9);
    const TokenSeq a = {1, 2, 3}, b = {4};
    const double y = net.forward(p, {&a, &b});
    const auto h1 = naive_gru(p, "embedding", "gru.task", {1, 2, 3}, 4, 3);
    const auto h2 = naive_gru(p, "embedding", "gru.action", {4}, 4, 3);
    std::vector<double> cat(h1);
    cat.insert(cat.end(), h2.begin(), h2.end());
    const Tensor& w1 = p.at("fc1.weight");
    const Tensor& b1 = p.at("fc1.bias");
    const Tensor& w2 = p.at("fc2.weight");
    double out = p.at("fc2.bias")[0];
    for (std::size_t r = 0; r < 3; ++r) {
        double z = b1[r];
        for (std::size_t c = 0; c < 6; ++c) z += w1[r * 6 + c] * cat[c];
        out += w2[r] * std::tanh(z);
    }
    EXPECT_NEAR(y, out, 1e-13);
}

TEST(FieldNet, BatchSharesEncodingsWithoutChangingResults) {
    const FieldNetwork net = small_net({Field::task, Field::action}, 4);
    const ParamSet p = net.init(2);
    const TokenSeq t = {5, 6}, a1 = {7}, a2 = {8, 9};
    const std::vector<FieldInputs> batch = {{&t, &a1}, {&t, &a2}, {&t, &a1}};
    BatchPass pass(net, p, batch);
    for (std::size_t i = 0; i < batch.size(); ++i) EXPECT_DOUBLE_EQ(pass.outputs()[i], net.forward(p, batch[i]));
}

TEST(FieldNet, BatchGradientMatchesFiniteDifferences) {
    const FieldNetwork net = small_net({Field::task, Field::state, Field::action}, 4);
    const ParamSet p = net.init(31);
    const TokenSeq t = {5, 6, 7}, s1 = {1, 2}, s2 = {3}, a1 = {7, 8}, a2 = {9};
    const std::vector<FieldInputs> batch = {{&t, &s1, &a1}, {&t, &s2, &a2}, {&t, &s1, &a2}};
    const std::vector<double> target = {0.3, -0.2, 0.9};
    auto loss = [&](const ParamSet& q) {
        double l = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const double d = net.forward(q, batch[i]) - target[i];
            l += d * d;
        }
        return l / 3;
    };
    BatchPass pass(net, p, batch);
    std::vector<double> dout;
    for (std::size_t i = 0; i < 3; ++i) dout.push_back(2 * (pass.outputs()[i] - target[i]) / 3);
    ParamSet g = p.zeros_like();
    pass.backward(dout, g);
    EXPECT_LT(finite_diff_check(p, g, loss), 1e-4);
}

TEST(FiniteDiff, DetectsWrongGradient) {
    ParamSet p;
    p.add("x", Tensor({2}, 1.0));
    ParamSet g = p.zeros_like();
    g.at("x")[0] = 2.0;
    g.at("x")[1] = 5.0; // true value is 2
    auto loss = [](const ParamSet& q) { return q.at("x")[0] * q.at("x")[0] + q.at("x")[1] * q.at("x")[1]; };
    EXPECT_GT(finite_diff_check(p, g, loss), 0.5);
    g.at("x")[1] = 2.0;
    EXPECT_LT(finite_diff_check(p, g, loss), 1e-8);
    EXPECT_THROW(finite_diff_check(p, g, loss, 0.0), InvalidArgument);
}

TEST(Adam, TwoStepsMatchClosedForm) {
    ParamSet p;
    p.add("w", Tensor({1}, 1.0));
    ParamSet g = p.zeros_like();
    AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
    AdamState st(p, cfg);
    double w = 1.0, m = 0, v = 0;
    const double grads[] = {0.5, -2.0};
    for (int k = 1; k <= 2; ++k) {
        const double gk = grads[k - 1];
        g.at("w")[0] = gk;
        adam_update(p, g, st);
        m = 0.9 * m + 0.1 * gk;
        v = 0.999 * v + 0.001 * gk * gk;
        const double mh = m / (1 - std::pow(0.9, k));
        const double vh = v / (1 - std::pow(0.999, k));
        w -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
        EXPECT_NEAR(p.at("w")[0], w, 1e-15);
    }
    EXPECT_EQ(st.step, 2u);
}

TEST(Checkpoint, RoundTripIsLosslessAndCanonical) {
    const FieldNetwork net = small_net({Field::task, Field::action}, 3);
    Checkpoint c;
    c.header.architecture_id = "q_single";
    c.header.dims = net.spec().dims;
    c.header.seed = 77;
    c.params = net.init(77);
    c.params.at("fc2.bias")[0] = 0.1 + 0.2; // not exactly representable in short decimal
    const std::string text = write_checkpoint(c);
    const Checkpoint back = read_checkpoint(text);
    EXPECT_EQ(back.params, c.params);
    EXPECT_EQ(back.header.architecture_id, "q_single");
    EXPECT_EQ(back.header.seed, 77u);
    EXPECT_EQ(write_checkpoint(back), text);
    for (std::size_t i = 0; i < c.params.size(); ++i) EXPECT_EQ(back.params.entry(i).first, c.params.entry(i).first);
}

TEST(Checkpoint, RejectsGarbage) {
    EXPECT_ANY_THROW(read_checkpoint("{not json"));
    EXPECT_ANY_THROW(read_checkpoint(R"({"format_version": 99})"));
}
