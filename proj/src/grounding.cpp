#include "agentcritic/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "agentcritic/error.hpp"
#include "agentcritic/text.hpp"

namespace agentcritic {

TrigramEmbedder::TrigramEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw InvalidArgument("embedding dimension must be positive");
}

Embedding embed_text(std::string_view input, std::size_t dim) {
    Embedding e;
    e.source_text = std::string(input);
    e.vector.assign(dim, 0.0);
    const std::string folded = text::fold(input);
    if (folded.empty()) {
        e.zero = true;
        return e;
    }
    const std::string padded = " " + folded + " ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (std::size_t j = i; j < i + 3; ++j) {
            h ^= static_cast<unsigned char>(padded[j]);
            h *= 0x100000001b3ULL;
        }
        e.vector[h % dim] += 1.0;
    }
    double norm = 0.0;
    for (double x : e.vector) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : e.vector) x /= norm;
    return e;
}

std::vector<Embedding> TrigramEmbedder::embed(std::span<const std::string> texts) const {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_text(t, dim_));
    return out;
}

RemoteEmbedder::RemoteEmbedder(std::string base_url, http::CallOptions opts)
    : base_url_(std::move(base_url)), opts_(opts) {
    const auto info = http::get_json(base_url_, "/info", opts_);
    if (!info.contains("dim") || !info["dim"].is_number_integer() || info["dim"].get<long>() <= 0)
        throw TransportError("/info reply has no positive integer dim", 1);
    dim_ = info["dim"].get<std::size_t>();
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) const {
    const nlohmann::json reply =
        http::post_json(base_url_, "/embed", {{"texts", std::vector<std::string>(texts.begin(), texts.end())}}, opts_);
    if (!reply.contains("vectors") || !reply["vectors"].is_array() || reply["vectors"].size() != texts.size())
        throw TransportError("/embed reply does not hold one vector per text", 1);
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Embedding e;
        e.source_text = texts[i];
        try {
            e.vector = reply["vectors"][i].get<std::vector<double>>();
        } catch (const nlohmann::json::exception&) {
            throw TransportError("/embed vector " + std::to_string(i) + " is not numeric", 1);
        }
        if (e.vector.size() != dim_)
            throw TransportError("/embed vector " + std::to_string(i) + " has dimension " +
                                     std::to_string(e.vector.size()) + ", announced " + std::to_string(dim_),
                                 1);
        e.zero = std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return x == 0.0; });
        out.push_back(std::move(e));
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw InvalidArgument("cosine_similarity: dimensions differ (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

GroundedSet map_to_valid(std::span<const Candidate> candidates, std::span<const ActionText> valid_actions,
                         std::size_t k, const Embedder& embedder) {
    if (valid_actions.empty()) throw InvalidArgument("map_to_valid: no valid actions");
    GroundedSet out;
    if (candidates.empty()) {
        out.warnings.emplace_back("no candidates to ground");
        return out;
    }
    const std::size_t n_cands = std::min(k, candidates.size());

    // Valid actions by folded text; the first spelling wins.
    std::map<std::string, std::size_t> valid_by_key;
    std::vector<std::size_t> distinct_valid;
    for (std::size_t i = 0; i < valid_actions.size(); ++i) {
        if (valid_by_key.try_emplace(text::fold(valid_actions[i].str()), i).second) distinct_valid.push_back(i);
    }

    std::vector<bool> taken(valid_actions.size(), false);
    std::vector<std::string> invalid;
    for (std::size_t c = 0; c < n_cands; ++c) {
        const Candidate& cand = candidates[c];
        auto it = valid_by_key.find(text::fold(cand.text.str()));
        if (it == valid_by_key.end()) {
            invalid.push_back(cand.text.str());
        } else if (!taken[it->second]) {
            taken[it->second] = true;
            out.actions.push_back(
                {valid_actions[it->second], CandidateOrigin::sampled_valid, std::nullopt, cand.log_likelihood});
        }
    }
    if (invalid.empty()) return out;

    std::vector<std::size_t> remaining;
    for (std::size_t i : distinct_valid)
        if (!taken[i]) remaining.push_back(i);
    if (remaining.empty()) return out;

    std::vector<std::string> remaining_text;
    for (std::size_t i : remaining) remaining_text.push_back(valid_actions[i].str());
    const std::vector<Embedding> inv_emb = embedder.embed(invalid);
    const std::vector<Embedding> val_emb = embedder.embed(remaining_text);

    std::vector<std::pair<double, std::size_t>> scored; // (similarity sum, index into remaining)
    for (std::size_t r = 0; r < remaining.size(); ++r) {
        double sum = 0.0;
        for (const Embedding& e : inv_emb) sum += cosine_similarity(val_emb[r].vector, e.vector);
        scored.push_back({sum, r});
    }
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return remaining_text[a.second] < remaining_text[b.second];
    });
    const std::size_t n_fill = std::min(invalid.size(), scored.size());
    for (std::size_t j = 0; j < n_fill; ++j) {
        const auto [sum, r] = scored[j];
        out.actions.push_back({valid_actions[remaining[r]], CandidateOrigin::mapped, sum, std::nullopt});
    }
    return out;
}

GroundedSet map_to_valid(std::span<const Candidate> candidates, std::span<const ActionText> valid_actions,
                         std::size_t k) {
    static const TrigramEmbedder builtin;
    return map_to_valid(candidates, valid_actions, k, builtin);
}

} // namespace agentcritic
