#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "agentcritic/tensor.hpp"

namespace agentcritic {

using TokenSeq = std::vector<std::int32_t>;

inline constexpr std::size_t kDefaultVocabSize = 8192;

// Lowercases, splits on whitespace and hashes each token (FNV-1a 64) into
// [0, vocab_size).
TokenSeq tokenize(std::string_view text, std::size_t vocab_size = kDefaultVocabSize);

struct NetDims {
    std::size_t vocab_size = kDefaultVocabSize;
    std::size_t embed_dim = 64;
    std::size_t hidden_dim = 128;

    bool operator==(const NetDims&) const = default;
};

// ---- affine layer ---------------------------------------------------------

// y = W x + b, W stored [out, in].
Eigen::VectorXd affine_forward(const Tensor& w, const Tensor& b, const Eigen::VectorXd& x);

// Accumulates dW += dy x^T and db += dy; returns dL/dx.
Eigen::VectorXd affine_backward(const Tensor& w, const Eigen::VectorXd& x, const Eigen::VectorXd& dy, Tensor& dw,
                                Tensor& db);

// ---- gated recurrent encoder ----------------------------------------------
//
//   r  = sigmoid(W_ir x + b_ir + W_hr h + b_hr)
//   z  = sigmoid(W_iz x + b_iz + W_hz h + b_hz)
//   n  = tanh(W_in x + b_in + r * (W_hn h + b_hn))
//   h' = (1 - z) * n + z * h
//
// Gate rows are stacked [r; z; n] in w_ih [3H, E], w_hh [3H, H], b_ih, b_hh [3H].

struct GruNames {
    explicit GruNames(const std::string& prefix)
        : w_ih(prefix + ".w_ih"), w_hh(prefix + ".w_hh"), b_ih(prefix + ".b_ih"), b_hh(prefix + ".b_hh") {}
    std::string w_ih, w_hh, b_ih, b_hh;
};

// Adds the four tensors of one GRU block under `prefix`.
void add_gru_params(ParamSet& params, const std::string& prefix, const NetDims& dims);

// Final hidden state after running the recurrence over the embedded tokens.
// An empty sequence returns the zero initial state. Throws on out-of-range ids.
Eigen::VectorXd gru_encode(const ParamSet& params, const std::string& embedding, const std::string& prefix,
                           std::span<const std::int32_t> tokens);

// ---- field network ----------------------------------------------------------
//
// One shared embedding, one GRU per text field, concatenation, then
// affine -> tanh -> affine to a scalar.

enum class Field : std::uint8_t { task, state, observation, free_look, inventory, action };

std::string_view to_string(Field f);

// three_field: task / whole state / action. five_field splits the state into
// observation, free_look and inventory.
enum class EncoderLayout : std::uint8_t { three_field, five_field };

std::string_view to_string(EncoderLayout layout);
EncoderLayout parse_encoder_layout(std::string_view name);
std::vector<Field> layout_fields(EncoderLayout layout, bool with_action);

struct FieldNetSpec {
    NetDims dims;
    std::vector<Field> fields;
};

// One token sequence per field, in FieldNetSpec::fields order. Pointers are
// borrowed; identical pointers within a batch are encoded once.
using FieldInputs = std::vector<const TokenSeq*>;

class FieldNetwork {
public:
    explicit FieldNetwork(FieldNetSpec spec);

    const FieldNetSpec& spec() const noexcept { return spec_; }
    std::size_t field_count() const noexcept { return spec_.fields.size(); }

    // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); embedding rows Uniform(-1, 1).
    ParamSet init(std::uint64_t seed) const;
    ParamSet empty_layout() const;
    void check(const ParamSet& params) const;

    Eigen::VectorXd encode(const ParamSet& params, std::size_t field_index, const TokenSeq& tokens) const;
    double head(const ParamSet& params, std::span<const Eigen::VectorXd> encodings) const;
    double forward(const ParamSet& params, const FieldInputs& inputs) const;

    static std::string gru_prefix(Field f);

private:
    FieldNetSpec spec_;
};

// Forward pass over a batch that keeps what backward needs. Encodings are
// shared across samples that reuse the same token sequence.
class BatchPass {
public:
    BatchPass(const FieldNetwork& net, const ParamSet& params, std::span<const FieldInputs> samples);
    ~BatchPass();
    BatchPass(BatchPass&&) noexcept;
    BatchPass& operator=(BatchPass&&) noexcept;

    std::span<const double> outputs() const noexcept;

    // grads += sum_i dout[i] * d output_i / d params, reduced in fixed order.
    void backward(std::span<const double> dout, ParamSet& grads) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---- optimizer --------------------------------------------------------------

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamState() = default;
    AdamState(const ParamSet& like, AdamConfig cfg) : m(like.zeros_like()), v(like.zeros_like()), config(cfg) {}

    ParamSet m;
    ParamSet v;
    std::uint64_t step = 0;
    AdamConfig config;
};

// Bias-corrected adaptive moment update, in place.
void adam_update(ParamSet& params, const ParamSet& grads, AdamState& state);

// ---- gradient verification --------------------------------------------------

using LossFn = std::function<double(const ParamSet&)>;

// max over entries of |analytic - central difference| / max(|analytic|, |fd|, 1e-8).
double finite_diff_check(const ParamSet& params, const ParamSet& analytic, const LossFn& loss, double h = 1e-4);

} // namespace agentcritic
