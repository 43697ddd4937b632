#include "chain.hpp"

#include "agentcritic/rng.hpp"

namespace chain {

using namespace agentcritic;

Task task() { return {"chain", "Walk to the right end of the corridor."}; }

EnvState state(int pos, std::uint32_t step_index) {
    EnvState s;
    s.observation = "You are at position " + std::to_string(pos) + ".";
    s.step_index = step_index;
    return s;
}

int next_pos(int pos, const std::string& action) {
    if (action == "go right") return pos + 1;
    return pos > 0 ? pos - 1 : 0;
}

std::vector<Trajectory> dataset(std::size_t n, double epsilon, std::uint64_t seed, int cap) {
    std::vector<Trajectory> out;
    Rng rng(seed);
    for (std::size_t e = 0; e < n; ++e) {
        Trajectory t;
        t.task = task();
        int pos = int(rng.index(4));
        for (int k = 0; k < cap && pos != kGoal; ++k) {
            std::string a = "go right";
            if (rng.uniform() < epsilon) a = rng.index(2) == 0 ? "go left" : "go right";
            const int np = next_pos(pos, a);
            Step st;
            st.state = state(pos, std::uint32_t(k));
            st.action = ActionText(a);
            st.reward = np == kGoal ? 100.0 : 0.0;
            st.done = np == kGoal;
            st.next_state = state(np, std::uint32_t(k + 1));
            t.steps.push_back(st);
            pos = np;
        }
        t.steps.back().next_state = implied_final_state(t.steps.back().state);
        t.success = pos == kGoal;
        t.final_score = t.success ? 100.0 : 0.0;
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace chain
