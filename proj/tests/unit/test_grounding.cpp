#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "agentcritic/error.hpp"
#include "agentcritic/grounding.hpp"
#include "grounding_oracle.hpp"
#include "json.hpp"
#include "stub_server.hpp"

using namespace agentcritic;

namespace {

class CountingEmbedder final : public Embedder {
public:
    mutable int calls = 0;
    std::size_t dim() const override { return inner_.dim(); }
    std::vector<Embedding> embed(std::span<const std::string> texts) const override {
        ++calls;
        return inner_.embed(texts);
    }

private:
    TrigramEmbedder inner_;
};

std::vector<Candidate> cands(std::initializer_list<const char*> texts) {
    std::vector<Candidate> out;
    double ll = -0.1;
    for (const char* t : texts) {
        out.push_back({ActionText(t), ll, CandidateOrigin::sampled_valid});
        ll -= 0.5;
    }
    return out;
}

std::vector<ActionText> actions(std::initializer_list<const char*> texts) {
    std::vector<ActionText> out;
    for (const char* t : texts) out.emplace_back(t);
    return out;
}

std::vector<std::string> sorted_texts(const GroundedSet& g) {
    std::vector<std::string> out;
    for (const auto& a : g.actions) out.push_back(a.action.str());
    std::sort(out.begin(), out.end());
    return out;
}

// Unhashed trigram cosine, used to check the hashed embedding on a clear-cut example.
double exact_trigram_cosine(const std::string& a, const std::string& b) {
    auto grams = [](const std::string& s) {
        std::map<std::string, double> m;
        const std::string p = " " + s + " ";
        for (std::size_t i = 0; i + 3 <= p.size(); ++i) m[p.substr(i, 3)] += 1;
        return m;
    };
    const auto ga = grams(a), gb = grams(b);
    double dot = 0, na = 0, nb = 0;
    for (const auto& [g, c] : ga) {
        na += c * c;
        if (auto it = gb.find(g); it != gb.end()) dot += c * it->second;
    }
    for (const auto& [g, c] : gb) nb += c * c;
    return dot / std::sqrt(na * nb);
}

} // namespace

TEST(Embed, DeterministicAndUnitNorm) {
    EXPECT_EQ(embed_text("abc").vector, embed_text("abc").vector);
    for (const char* t : {"abc", "go north", "put the key in the box", "X"}) {
        const auto e = embed_text(t);
        double n = 0;
        for (double x : e.vector) n += x * x;
        EXPECT_NEAR(std::sqrt(n), 1.0, 1e-9) << t;
        EXPECT_EQ(e.vector.size(), kDefaultEmbeddingDim);
    }
    EXPECT_TRUE(embed_text("   ").zero);
}

TEST(Embed, TrigramOverlapOrdersSimilarity) {
    const auto a = embed_text("go north").vector;
    const auto b = embed_text("go north please").vector;
    const auto c = embed_text("eat apple").vector;
    EXPECT_GT(exact_trigram_cosine("go north", "go north please"), exact_trigram_cosine("go north", "eat apple"));
    EXPECT_GT(cosine_similarity(a, b), cosine_similarity(a, c));
}

TEST(Cosine, HandValues) {
    const std::vector<double> x{1, 0}, y{0, 1}, d{1 / std::sqrt(2.0), 1 / std::sqrt(2.0)}, z{0, 0};
    EXPECT_DOUBLE_EQ(cosine_similarity(x, x), 1.0);
    EXPECT_DOUBLE_EQ(cosine_similarity(x, y), 0.0);
    EXPECT_NEAR(cosine_similarity(x, d), std::sqrt(2.0) / 2, 1e-15);
    EXPECT_EQ(cosine_similarity(x, z), 0.0);
    EXPECT_THROW(cosine_similarity(x, std::vector<double>{1, 0, 0}), InvalidArgument);
}

TEST(MapToValid, AllValidSkipsEmbedding) {
    const CountingEmbedder emb;
    const auto c = cands({"go left", "LOOK ", "take key"});
    const auto g = map_to_valid(c, actions({"look", "go left", "go right", "take key"}), 3, emb);
    EXPECT_EQ(emb.calls, 0);
    ASSERT_EQ(g.actions.size(), 3u);
    EXPECT_EQ(g.actions[0].action.str(), "go left");
    EXPECT_EQ(g.actions[1].action.str(), "look");
    for (const auto& a : g.actions) {
        EXPECT_EQ(a.origin, CandidateOrigin::sampled_valid);
        EXPECT_TRUE(a.log_likelihood.has_value());
    }
}

TEST(MapToValid, OneValidOneInvalid) {
    const auto c = cands({"look", "walk to the right"});
    const std::vector<std::string> valid{"look", "go left", "go right", "take key"};
    const auto g = map_to_valid(c, actions({"look", "go left", "go right", "take key"}), 2);
    ASSERT_EQ(g.actions.size(), 2u);
    EXPECT_EQ(g.actions[1].origin, CandidateOrigin::mapped);
    EXPECT_EQ(sorted_texts(g), oracle::brute_force_grounding({"look", "walk to the right"}, valid, 2));
}

TEST(MapToValid, ExcludesStepBPicks) {
    // "look around" is closest to "look", which is already kept.
    const auto c = cands({"look", "look around"});
    const std::vector<std::string> valid{"look", "go left", "go right", "take key"};
    const auto g = map_to_valid(c, actions({"look", "go left", "go right", "take key"}), 2);
    ASSERT_EQ(g.actions.size(), 2u);
    EXPECT_EQ(g.actions[0].action.str(), "look");
    EXPECT_NE(g.actions[1].action.str(), "look");
    EXPECT_EQ(sorted_texts(g), oracle::brute_force_grounding({"look", "look around"}, valid, 2));
}

TEST(MapToValid, EmptyCandidatesWarn) {
    const auto g = map_to_valid({}, actions({"look"}), 3);
    EXPECT_TRUE(g.actions.empty());
    EXPECT_EQ(g.warnings.size(), 1u);
    EXPECT_THROW(map_to_valid(cands({"look"}), {}, 3), InvalidArgument);
}

TEST(MapToValid, MatchesBruteForce) {
    const std::vector<std::string> words{"go", "left", "right", "take", "key", "coin", "put", "in", "box", "look",
                                         "open", "door", "the", "north"};
    std::mt19937_64 gen(2024);
    auto phrase = [&] {
        std::string s;
        const int n = 1 + int(gen() % 3);
        for (int i = 0; i < n; ++i) s += (i ? " " : "") + words[gen() % words.size()];
        return s;
    };
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::string> valid;
        const std::size_t nv = 1 + gen() % 10;
        while (valid.size() < nv) {
            const std::string p = phrase();
            if (std::find(valid.begin(), valid.end(), p) == valid.end()) valid.push_back(p);
        }
        const std::size_t k = 1 + gen() % 6;
        std::vector<std::string> ctexts;
        std::vector<Candidate> c;
        for (std::size_t i = 0; i < k; ++i) {
            const std::string t = gen() % 3 == 0 ? valid[gen() % valid.size()] : phrase();
            ctexts.push_back(t);
            c.push_back({ActionText(t), -0.1 * double(i + 1), CandidateOrigin::sampled_valid});
        }
        std::vector<ActionText> va(valid.begin(), valid.end());
        const auto g = map_to_valid(c, va, k);
        ASSERT_EQ(sorted_texts(g), oracle::brute_force_grounding(ctexts, valid, k)) << "trial " << trial;
        EXPECT_LE(g.actions.size(), std::min(k, valid.size()));
        for (const auto& a : g.actions)
            EXPECT_NE(std::find(valid.begin(), valid.end(), a.action.str()), valid.end());
    }
}

TEST(MapToValid, OrderInvariant) {
    const auto c = cands({"look", "walk right", "grab the key"});
    auto va = actions({"look", "go left", "go right", "take key", "take coin", "put key in box"});
    const auto base = sorted_texts(map_to_valid(c, va, 3));
    std::mt19937_64 gen(7);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(va.begin(), va.end(), gen);
        auto cc = c;
        std::shuffle(cc.begin(), cc.end(), gen);
        EXPECT_EQ(sorted_texts(map_to_valid(cc, va, 3)), base);
    }
}

TEST(RemoteEmbedder, UsesService) {
    StubServer srv;
    srv.server.Get("/info", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"dim":2})", "application/json");
    });
    srv.server.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        nlohmann::json vecs = nlohmann::json::array();
        for (const auto& t : body["texts"]) {
            const std::string s = t;
            vecs.push_back(s.find("right") != std::string::npos ? std::vector<double>{1, 0} : std::vector<double>{0, 1});
        }
        res.set_content(nlohmann::json{{"vectors", vecs}}.dump(), "application/json");
    });
    srv.start();
    const RemoteEmbedder emb(srv.url());
    EXPECT_EQ(emb.dim(), 2u);
    const auto g = map_to_valid(cands({"move rightwards"}), actions({"look", "go right"}), 1, emb);
    ASSERT_EQ(g.actions.size(), 1u);
    EXPECT_EQ(g.actions[0].action.str(), "go right");
    EXPECT_DOUBLE_EQ(*g.actions[0].similarity_sum, 1.0);
}

TEST(RemoteEmbedder, RejectsWrongDimension) {
    StubServer srv;
    srv.server.Get("/info", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"dim":3})", "application/json");
    });
    srv.server.Post("/embed", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"vectors":[[1,0]]})", "application/json");
    });
    srv.start();
    const RemoteEmbedder emb(srv.url());
    const std::vector<std::string> t{"a"};
    EXPECT_THROW(emb.embed(t), TransportError);
}
