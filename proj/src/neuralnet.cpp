#include "agentcritic/neuralnet.hpp"

#include <cmath>
#include <unordered_map>

#include "agentcritic/error.hpp"
#include "agentcritic/rng.hpp"
#include "agentcritic/text.hpp"

namespace agentcritic {

TokenSeq tokenize(std::string_view input, std::size_t vocab_size) {
    if (vocab_size < 2) throw InvalidArgument("vocab_size must be >= 2");
    TokenSeq out;
    const std::string lowered = text::to_lower(input);
    for (std::string_view tok : text::split_whitespace(lowered)) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : tok) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
        out.push_back(static_cast<std::int32_t>(h % vocab_size));
    }
    return out;
}

Eigen::VectorXd affine_forward(const Tensor& w, const Tensor& b, const Eigen::VectorXd& x) {
    return w.matrix() * x + b.vector();
}

Eigen::VectorXd affine_backward(const Tensor& w, const Eigen::VectorXd& x, const Eigen::VectorXd& dy, Tensor& dw,
                                Tensor& db) {
    dw.matrix().noalias() += dy * x.transpose();
    db.vector() += dy;
    return w.matrix().transpose() * dy;
}

// ---- GRU ------------------------------------------------------------------

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruRefs {
    const Tensor& emb;
    const Tensor& w_ih;
    const Tensor& w_hh;
    const Tensor& b_ih;
    const Tensor& b_hh;

    GruRefs(const ParamSet& p, const std::string& embedding, const GruNames& n)
        : emb(p.at(embedding)), w_ih(p.at(n.w_ih)), w_hh(p.at(n.w_hh)), b_ih(p.at(n.b_ih)), b_hh(p.at(n.b_hh)) {}

    Eigen::Index hidden() const { return Eigen::Index(w_hh.cols()); }
};

// Per-step activations kept for backpropagation through time.
struct GruTape {
    TokenSeq tokens;
    Eigen::MatrixXd h_prev, r, z, n, ghn; // hidden x T
};

Eigen::VectorXd gru_run(const GruRefs& g, std::span<const std::int32_t> tokens, GruTape* tape) {
    const Eigen::Index H = g.hidden();
    const auto vocab = static_cast<std::int64_t>(g.emb.rows());
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    const Eigen::Index T = Eigen::Index(tokens.size());
    if (tape) {
        tape->tokens.assign(tokens.begin(), tokens.end());
        tape->h_prev.resize(H, T);
        tape->r.resize(H, T);
        tape->z.resize(H, T);
        tape->n.resize(H, T);
        tape->ghn.resize(H, T);
    }
    const auto b_ih = g.b_ih.vector();
    const auto b_hh = g.b_hh.vector();
    Eigen::VectorXd gi(3 * H), gh(3 * H);
    for (Eigen::Index t = 0; t < T; ++t) {
        const std::int32_t tok = tokens[std::size_t(t)];
        if (tok < 0 || tok >= vocab)
            throw InvalidArgument("token id " + std::to_string(tok) + " outside vocabulary of " +
                                  std::to_string(vocab));
        gi.noalias() = g.w_ih.matrix() * g.emb.matrix().row(tok).transpose();
        gi += b_ih;
        gh.noalias() = g.w_hh.matrix() * h;
        gh += b_hh;
        Eigen::VectorXd r = (gi.head(H) + gh.head(H)).unaryExpr(&sigmoid);
        Eigen::VectorXd z = (gi.segment(H, H) + gh.segment(H, H)).unaryExpr(&sigmoid);
        Eigen::VectorXd ghn = gh.tail(H);
        Eigen::VectorXd n = (gi.tail(H).array() + r.array() * ghn.array()).tanh().matrix();
        if (tape) {
            tape->h_prev.col(t) = h;
            tape->r.col(t) = r;
            tape->z.col(t) = z;
            tape->n.col(t) = n;
            tape->ghn.col(t) = ghn;
        }
        h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    }
    return h;
}

struct GruGradRefs {
    Tensor& emb;
    Tensor& w_ih;
    Tensor& w_hh;
    Tensor& b_ih;
    Tensor& b_hh;
};

void gru_backward(const GruRefs& g, const GruTape& tape, Eigen::VectorXd dh, GruGradRefs& d) {
    const Eigen::Index H = g.hidden();
    Eigen::VectorXd dgi(3 * H), dgh(3 * H);
    for (Eigen::Index t = Eigen::Index(tape.tokens.size()) - 1; t >= 0; --t) {
        const auto h = tape.h_prev.col(t).array();
        const auto r = tape.r.col(t).array();
        const auto z = tape.z.col(t).array();
        const auto n = tape.n.col(t).array();
        const auto ghn = tape.ghn.col(t).array();

        const Eigen::ArrayXd dn_pre = dh.array() * (1.0 - z) * (1.0 - n * n);
        const Eigen::ArrayXd dz_pre = dh.array() * (h - n) * z * (1.0 - z);
        const Eigen::ArrayXd dr_pre = dn_pre * ghn * r * (1.0 - r);
        dgi << dr_pre.matrix(), dz_pre.matrix(), dn_pre.matrix();
        dgh << dr_pre.matrix(), dz_pre.matrix(), (dn_pre * r).matrix();

        const std::int32_t tok = tape.tokens[std::size_t(t)];
        const auto x = g.emb.matrix().row(tok).transpose();
        d.w_ih.matrix().noalias() += dgi * x.transpose();
        d.b_ih.vector() += dgi;
        d.w_hh.matrix().noalias() += dgh * tape.h_prev.col(t).transpose();
        d.b_hh.vector() += dgh;
        d.emb.matrix().row(tok).noalias() += (g.w_ih.matrix().transpose() * dgi).transpose();

        Eigen::VectorXd dh_prev = (dh.array() * z).matrix();
        dh_prev.noalias() += g.w_hh.matrix().transpose() * dgh;
        dh = std::move(dh_prev);
    }
}

void fill_uniform(Tensor& t, Rng& rng, double bound) {
    for (double& x : t.data()) x = rng.uniform(-bound, bound);
}

} // namespace

void add_gru_params(ParamSet& params, const std::string& prefix, const NetDims& dims) {
    const GruNames n(prefix);
    params.add(n.w_ih, Tensor({3 * dims.hidden_dim, dims.embed_dim}));
    params.add(n.w_hh, Tensor({3 * dims.hidden_dim, dims.hidden_dim}));
    params.add(n.b_ih, Tensor({3 * dims.hidden_dim}));
    params.add(n.b_hh, Tensor({3 * dims.hidden_dim}));
}

Eigen::VectorXd gru_encode(const ParamSet& params, const std::string& embedding, const std::string& prefix,
                           std::span<const std::int32_t> tokens) {
    return gru_run(GruRefs(params, embedding, GruNames(prefix)), tokens, nullptr);
}

// ---- field network --------------------------------------------------------

std::string_view to_string(Field f) {
    switch (f) {
    case Field::task: return "task";
    case Field::state: return "state";
    case Field::observation: return "observation";
    case Field::free_look: return "free_look";
    case Field::inventory: return "inventory";
    case Field::action: return "action";
    }
    return "?";
}

std::string_view to_string(EncoderLayout layout) {
    return layout == EncoderLayout::three_field ? "three_field" : "five_field";
}

EncoderLayout parse_encoder_layout(std::string_view name) {
    if (name == "three_field") return EncoderLayout::three_field;
    if (name == "five_field") return EncoderLayout::five_field;
    throw ConfigError("unknown encoder layout '" + std::string(name) + "'");
}

std::vector<Field> layout_fields(EncoderLayout layout, bool with_action) {
    std::vector<Field> f;
    if (layout == EncoderLayout::three_field) {
        f = {Field::task, Field::state};
    } else {
        f = {Field::task, Field::observation, Field::free_look, Field::inventory};
    }
    if (with_action) f.push_back(Field::action);
    return f;
}

namespace {
const std::string kEmbedding = "embedding";
const std::string kFc1W = "fc1.weight", kFc1B = "fc1.bias", kFc2W = "fc2.weight", kFc2B = "fc2.bias";
} // namespace

FieldNetwork::FieldNetwork(FieldNetSpec spec) : spec_(std::move(spec)) {
    if (spec_.fields.empty()) throw InvalidArgument("field network needs at least one field");
    if (spec_.dims.vocab_size < 2 || spec_.dims.embed_dim == 0 || spec_.dims.hidden_dim == 0)
        throw InvalidArgument("invalid network dimensions");
}

std::string FieldNetwork::gru_prefix(Field f) { return "gru." + std::string(to_string(f)); }

ParamSet FieldNetwork::empty_layout() const {
    const NetDims& d = spec_.dims;
    ParamSet p;
    p.add(kEmbedding, Tensor({d.vocab_size, d.embed_dim}));
    for (Field f : spec_.fields) add_gru_params(p, gru_prefix(f), d);
    p.add(kFc1W, Tensor({d.hidden_dim, d.hidden_dim * spec_.fields.size()}));
    p.add(kFc1B, Tensor({d.hidden_dim}));
    p.add(kFc2W, Tensor({1, d.hidden_dim}));
    p.add(kFc2B, Tensor({1}));
    return p;
}

ParamSet FieldNetwork::init(std::uint64_t seed) const {
    ParamSet p = empty_layout();
    Rng rng(seed);
    const double h = double(spec_.dims.hidden_dim);
    for (auto& [name, t] : p) {
        double bound;
        if (name == kEmbedding) {
            bound = 1.0;
        } else if (name.ends_with(".w_ih")) {
            bound = 1.0 / std::sqrt(double(spec_.dims.embed_dim));
        } else if (name == kFc1W || name == kFc1B) {
            bound = 1.0 / std::sqrt(h * double(spec_.fields.size()));
        } else {
            // w_hh, GRU biases and the output layer all have fan_in = hidden.
            bound = 1.0 / std::sqrt(h);
        }
        fill_uniform(t, rng, bound);
    }
    return p;
}

void FieldNetwork::check(const ParamSet& params) const {
    if (!params.same_layout(empty_layout()))
        throw InvalidArgument("parameters do not match the declared architecture");
}

Eigen::VectorXd FieldNetwork::encode(const ParamSet& params, std::size_t field_index, const TokenSeq& tokens) const {
    return gru_encode(params, kEmbedding, gru_prefix(spec_.fields.at(field_index)), tokens);
}

double FieldNetwork::head(const ParamSet& params, std::span<const Eigen::VectorXd> encodings) const {
    const Eigen::Index H = Eigen::Index(spec_.dims.hidden_dim);
    Eigen::VectorXd c(H * Eigen::Index(encodings.size()));
    for (std::size_t f = 0; f < encodings.size(); ++f) c.segment(Eigen::Index(f) * H, H) = encodings[f];
    const Eigen::VectorXd h1 = affine_forward(params.at(kFc1W), params.at(kFc1B), c).array().tanh().matrix();
    return affine_forward(params.at(kFc2W), params.at(kFc2B), h1)(0);
}

double FieldNetwork::forward(const ParamSet& params, const FieldInputs& inputs) const {
    if (inputs.size() != field_count()) throw InvalidArgument("wrong number of input fields");
    std::vector<Eigen::VectorXd> enc;
    enc.reserve(inputs.size());
    for (std::size_t f = 0; f < inputs.size(); ++f) enc.push_back(encode(params, f, *inputs[f]));
    return head(params, enc);
}

// ---- batch pass -----------------------------------------------------------

struct BatchPass::Impl {
    const FieldNetwork& net;
    const ParamSet& params;
    std::vector<GruNames> names;
    // Per field: unique sequences, their tapes and final states.
    std::vector<std::vector<GruTape>> tapes;
    std::vector<std::vector<Eigen::VectorXd>> encodings;
    // Per sample: slot index per field, concat input and hidden activation.
    std::vector<std::vector<std::size_t>> slots;
    std::vector<Eigen::VectorXd> concat;
    std::vector<Eigen::VectorXd> hidden;
    std::vector<double> outputs;

    Impl(const FieldNetwork& n, const ParamSet& p) : net(n), params(p) {}
};

BatchPass::BatchPass(const FieldNetwork& net, const ParamSet& params, std::span<const FieldInputs> samples)
    : impl_(std::make_unique<Impl>(net, params)) {
    Impl& s = *impl_;
    const std::size_t F = net.field_count();
    const Eigen::Index H = Eigen::Index(net.spec().dims.hidden_dim);
    for (Field f : net.spec().fields) s.names.emplace_back(FieldNetwork::gru_prefix(f));
    s.tapes.resize(F);
    s.encodings.resize(F);

    std::vector<std::unordered_map<const TokenSeq*, std::size_t>> seen(F);
    s.slots.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const FieldInputs& in = samples[i];
        if (in.size() != F) throw InvalidArgument("sample " + std::to_string(i) + ": wrong number of input fields");
        std::vector<std::size_t> sl(F);
        for (std::size_t f = 0; f < F; ++f) {
            auto [it, fresh] = seen[f].try_emplace(in[f], s.tapes[f].size());
            if (fresh) {
                GruRefs g(params, kEmbedding, s.names[f]);
                s.tapes[f].emplace_back();
                s.encodings[f].push_back(gru_run(g, *in[f], &s.tapes[f].back()));
            }
            sl[f] = it->second;
        }
        s.slots.push_back(std::move(sl));
    }

    const Tensor& w1 = params.at(kFc1W);
    const Tensor& b1 = params.at(kFc1B);
    const Tensor& w2 = params.at(kFc2W);
    const Tensor& b2 = params.at(kFc2B);
    s.concat.reserve(samples.size());
    s.hidden.reserve(samples.size());
    s.outputs.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Eigen::VectorXd c(H * Eigen::Index(F));
        for (std::size_t f = 0; f < F; ++f) c.segment(Eigen::Index(f) * H, H) = s.encodings[f][s.slots[i][f]];
        Eigen::VectorXd h1 = affine_forward(w1, b1, c).array().tanh().matrix();
        s.outputs.push_back(affine_forward(w2, b2, h1)(0));
        s.concat.push_back(std::move(c));
        s.hidden.push_back(std::move(h1));
    }
}

BatchPass::~BatchPass() = default;
BatchPass::BatchPass(BatchPass&&) noexcept = default;
BatchPass& BatchPass::operator=(BatchPass&&) noexcept = default;

std::span<const double> BatchPass::outputs() const noexcept { return impl_->outputs; }

void BatchPass::backward(std::span<const double> dout, ParamSet& grads) const {
    const Impl& s = *impl_;
    if (dout.size() != s.outputs.size()) throw InvalidArgument("backward: dout size does not match batch");
    const std::size_t F = s.net.field_count();
    const Eigen::Index H = Eigen::Index(s.net.spec().dims.hidden_dim);

    std::vector<std::vector<Eigen::VectorXd>> denc(F);
    for (std::size_t f = 0; f < F; ++f) denc[f].assign(s.tapes[f].size(), Eigen::VectorXd::Zero(H));

    const Tensor& w1 = s.params.at(kFc1W);
    const Tensor& w2 = s.params.at(kFc2W);
    Tensor& dw1 = grads.at(kFc1W);
    Tensor& db1 = grads.at(kFc1B);
    Tensor& dw2 = grads.at(kFc2W);
    Tensor& db2 = grads.at(kFc2B);
    for (std::size_t i = 0; i < dout.size(); ++i) {
        if (dout[i] == 0.0) continue;
        Eigen::VectorXd dy(1);
        dy(0) = dout[i];
        const Eigen::VectorXd dh1 = affine_backward(w2, s.hidden[i], dy, dw2, db2);
        const Eigen::VectorXd da1 = (dh1.array() * (1.0 - s.hidden[i].array().square())).matrix();
        const Eigen::VectorXd dc = affine_backward(w1, s.concat[i], da1, dw1, db1);
        for (std::size_t f = 0; f < F; ++f) denc[f][s.slots[i][f]] += dc.segment(Eigen::Index(f) * H, H);
    }

    Tensor& demb = grads.at(kEmbedding);
    for (std::size_t f = 0; f < F; ++f) {
        GruRefs g(s.params, kEmbedding, s.names[f]);
        GruGradRefs d{demb, grads.at(s.names[f].w_ih), grads.at(s.names[f].w_hh), grads.at(s.names[f].b_ih),
                      grads.at(s.names[f].b_hh)};
        for (std::size_t k = 0; k < s.tapes[f].size(); ++k) {
            if (denc[f][k].isZero(0.0)) continue;
            gru_backward(g, s.tapes[f][k], denc[f][k], d);
        }
    }
}

// ---- optimizer ------------------------------------------------------------

void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state) {
    params.require_same_layout(grads, "adam_update");
    params.require_same_layout(state.m, "adam_update (moments)");
    const AdamConfig& c = state.config;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(c.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params.entry(i).second.vector().array();
        const auto g = grads.entry(i).second.vector().array();
        auto m = state.m.entry(i).second.vector().array();
        auto v = state.v.entry(i).second.vector().array();
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.square();
        p -= c.lr * (m / bc1) / ((v / bc2).sqrt() + c.eps);
    }
}

// ---- finite differences ---------------------------------------------------

double finite_diff_check(const ParamSet& params, const ParamSet& analytic, const LossFn& loss, double h) {
    if (!(h > 0.0 && h <= 1e-2)) throw InvalidArgument("finite difference step must be in (0, 1e-2]");
    params.require_same_layout(analytic, "finite_diff_check");
    ParamSet probe = params;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.size(); ++i) {
        Tensor& t = probe.entry(i).second;
        const Tensor& a = analytic.entry(i).second;
        for (std::size_t k = 0; k < t.size(); ++k) {
            const double orig = t[k];
            t[k] = orig + h;
            const double up = loss(probe);
            t[k] = orig - h;
            const double down = loss(probe);
            t[k] = orig;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(a[k]), std::abs(fd), 1e-8});
            worst = std::max(worst, std::abs(a[k] - fd) / denom);
        }
    }
    return worst;
}

} // namespace agentcritic
