#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentcritic/http_json.hpp"
#include "agentcritic/policy.hpp"

namespace agentcritic {

inline constexpr std::size_t kDefaultEmbeddingDim = 256;

struct Embedding {
    std::vector<double> vector;
    std::string source_text;
    // Set for blank input: the vector is all zeros and was not normalized.
    bool zero = false;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;
};

// Hashed character-trigram counts over the lowercased, space-padded text, L2-normalized.
class TrigramEmbedder final : public Embedder {
public:
    explicit TrigramEmbedder(std::size_t dim = kDefaultEmbeddingDim);
    std::size_t dim() const override { return dim_; }
    std::vector<Embedding> embed(std::span<const std::string> texts) const override;

private:
    std::size_t dim_;
};

Embedding embed_text(std::string_view text, std::size_t dim = kDefaultEmbeddingDim);

// External sentence encoder: GET /info -> {dim}; POST /embed {texts} -> {vectors}.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(std::string base_url, http::CallOptions opts = {});
    std::size_t dim() const override { return dim_; }
    std::vector<Embedding> embed(std::span<const std::string> texts) const override;

private:
    std::string base_url_;
    http::CallOptions opts_;
    std::size_t dim_ = 0;
};

// a.b / (|a||b|); 0 when either side is the zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct GroundedAction {
    ActionText action;
    CandidateOrigin origin;
    std::optional<double> similarity_sum;  // mapped actions only
    std::optional<double> log_likelihood;  // sampled_valid actions only
};

struct GroundedSet {
    std::vector<GroundedAction> actions;
    std::vector<std::string> warnings;
};

// Keeps candidates that already name a valid action (trimmed, case-folded match),
// then fills one slot per remaining invalid candidate with the valid actions whose
// summed cosine similarity to the invalid candidates is largest, skipping actions
// already kept. Ties go to the lexicographically smaller action text.
GroundedSet map_to_valid(std::span<const Candidate> candidates, std::span<const ActionText> valid_actions,
                         std::size_t k, const Embedder& embedder);
GroundedSet map_to_valid(std::span<const Candidate> candidates, std::span<const ActionText> valid_actions,
                         std::size_t k);

} // namespace agentcritic
