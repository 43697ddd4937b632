#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "agentcritic/error.hpp"
#include "agentcritic/experience.hpp"
#include "chain.hpp"

using namespace agentcritic;

namespace {

EnvState st(const std::string& obs, std::uint32_t t, std::string inv = "", std::string look = "") {
    return EnvState{obs, std::move(inv), std::move(look), t};
}

// Scores 0 -> 25 -> 25 -> 100 over three steps.
Trajectory scored_traj() {
    Trajectory t;
    t.task = {"t1", "Move the key to the box."};
    const double pts[] = {25, 0, 75};
    const char* acts[] = {"take key", "go right", "put key in box"};
    for (std::uint32_t i = 0; i < 3; ++i) {
        Step s;
        s.state = st("room " + std::to_string(i), i, "inv " + std::to_string(i), "look " + std::to_string(i));
        s.action = ActionText(acts[i]);
        s.reward = pts[i];
        s.done = i == 2;
        s.next_state = i < 2 ? st("room " + std::to_string(i + 1), i + 1, "inv " + std::to_string(i + 1),
                                  "look " + std::to_string(i + 1))
                             : implied_final_state(s.state);
        t.steps.push_back(s);
    }
    t.final_score = 100;
    t.success = true;
    return t;
}

Trajectory linear_traj(std::size_t n) {
    Trajectory t;
    t.task = {"lin", "Do things."};
    for (std::uint32_t i = 0; i < n; ++i) {
        Step s;
        s.state = st("s" + std::to_string(i + 1), i);
        s.action = ActionText("a" + std::to_string(i + 1));
        s.next_state = st("s" + std::to_string(i + 2), i + 1);
        t.steps.push_back(s);
    }
    t.steps.back().next_state = implied_final_state(t.steps.back().state);
    return t;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

} // namespace

TEST(ActionText, RejectsBlank) {
    EXPECT_THROW(ActionText("   "), InvalidArgument);
    EXPECT_THROW(ActionText(""), InvalidArgument);
    EXPECT_EQ(ActionText("look").str(), "look");
}

TEST(EnvState, TextSkipsEmptyParts) {
    EXPECT_EQ(st("obs", 0, "", "look").text(), "obs\nlook");
    EXPECT_EQ(st("obs", 0, "inv", "look").text(), "obs\ninv\nlook");
}

TEST(Validate, AcceptsWellFormed) { EXPECT_NO_THROW(validate(scored_traj())); }

TEST(Validate, ReportsViolations) {
    auto t = scored_traj();
    t.steps[1].reward = 10; // sum no longer 100
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.final_score = 75;
    t.steps[2].reward = 50; // sums to 75, but success claims 100
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.steps[0].done = true;
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.steps[1].next_state.observation = "elsewhere";
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.steps[2].state.step_index = 1;
    t.steps[1].next_state.step_index = 1;
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.steps.clear();
    EXPECT_THROW(validate(t), InvalidArgument);

    t = scored_traj();
    t.task.description = " ";
    EXPECT_THROW(validate(t), InvalidArgument);
}

TEST(IlInstances, ThreeStepExample) {
    const auto inst = decompose_to_il_instances(linear_traj(3), 10);
    ASSERT_EQ(inst.size(), 3u);
    EXPECT_EQ(inst[1].context, "Task: Do things.\nState: s1\nAction: a1\nState: s2\n");
    EXPECT_EQ(inst[1].target.str(), "a2");
    EXPECT_EQ(inst[2].target.str(), "a3");
}

TEST(IlInstances, SingleStep) {
    const auto inst = decompose_to_il_instances(linear_traj(1), 10);
    ASSERT_EQ(inst.size(), 1u);
    EXPECT_EQ(inst[0].context, "Task: Do things.\nState: s1\n");
}

TEST(IlInstances, WindowKeepsMostRecentPairs) {
    const auto inst = decompose_to_il_instances(linear_traj(12), 10);
    ASSERT_EQ(inst.size(), 12u);
    const std::string& c = inst[11].context;
    EXPECT_EQ(count(c, "Action: "), 10u);
    EXPECT_EQ(c.find("State: s1\n"), std::string::npos);
    EXPECT_NE(c.find("State: s2\nAction: a2\n"), std::string::npos);
    EXPECT_NE(c.find("Action: a11\nState: s12\n"), std::string::npos);
}

TEST(IlInstances, CountMatchesStepsForAnyWindow) {
    for (std::size_t w : {1u, 2u, 5u, 50u}) EXPECT_EQ(decompose_to_il_instances(linear_traj(7), w).size(), 7u);
}

TEST(IlInstances, EmptyTrajectoryThrows) {
    Trajectory t;
    t.task = {"x", "y"};
    try {
        decompose_to_il_instances(t, 10);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("empty trajectory"), std::string::npos);
    }
}

TEST(DecomposeSteps, DeltaMode) {
    const auto steps = decompose_to_steps(scored_traj(), RewardMode::delta);
    ASSERT_EQ(steps.size(), 3u);
    EXPECT_DOUBLE_EQ(steps[0].reward, 0.25);
    EXPECT_DOUBLE_EQ(steps[1].reward, 0.0);
    EXPECT_DOUBLE_EQ(steps[2].reward, 0.75);
}

TEST(DecomposeSteps, TerminalMode) {
    const auto steps = decompose_to_steps(scored_traj(), RewardMode::terminal);
    EXPECT_EQ(steps[0].reward, 0.0);
    EXPECT_EQ(steps[1].reward, 0.0);
    EXPECT_EQ(steps[2].reward, 1.0);
}

TEST(DecomposeSteps, SingleFailedStep) {
    Trajectory t = linear_traj(1);
    t.steps[0].done = true;
    const auto steps = decompose_to_steps(t, RewardMode::delta);
    ASSERT_EQ(steps.size(), 1u);
    EXPECT_EQ(steps[0].reward, 0.0);
    EXPECT_TRUE(steps[0].done);
}

TEST(DecomposeSteps, UnknownModeIsConfigError) { EXPECT_THROW(parse_reward_mode("sparse"), ConfigError); }

TEST(DecomposeSteps, DeltaRewardsConserveScore) {
    for (const auto& t : chain::dataset(50, 0.5, 7)) {
        double sum = 0.0;
        for (const auto& s : decompose_to_steps(t, RewardMode::delta)) sum += s.reward;
        EXPECT_DOUBLE_EQ(sum, t.final_score / 100.0);
    }
}

TEST(Memory, InsertAndStepView) {
    ExperienceMemory mem;
    mem.insert(scored_traj());
    EXPECT_EQ(mem.size(), 1u);
    EXPECT_EQ(mem.step_count(), 3u);
    EXPECT_EQ(mem.step(mem.step_view()[2]).action.str(), "put key in box");
    EXPECT_EQ(mem.task_of(mem.step_view()[0]).id, "t1");
}

TEST(Memory, StepViewLengthIsSumOfSteps) {
    ExperienceMemory mem;
    std::size_t total = 0;
    for (const auto& t : chain::dataset(2566, 0.5, 11)) {
        total += t.steps.size();
        mem.insert(t);
    }
    EXPECT_EQ(mem.size(), 2566u);
    EXPECT_EQ(mem.step_count(), total);
}

TEST(Memory, RejectsBrokenChain) {
    ExperienceMemory mem;
    auto t = scored_traj();
    t.steps[0].next_state.observation = "nowhere";
    EXPECT_THROW(mem.insert(t), InvalidArgument);
    EXPECT_EQ(mem.size(), 0u);
}

TEST(SampleBatch, SizeAndDeterminism) {
    ExperienceMemory mem;
    for (const auto& t : chain::dataset(20, 0.5, 3)) mem.insert(t);
    const auto a = sample_batch(mem, 128, 42);
    const auto b = sample_batch(mem, 128, 42);
    EXPECT_EQ(a.size(), 128u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample_batch(mem, 128, 43));
}

TEST(SampleBatch, SingleStepRepeats) {
    ExperienceMemory mem;
    mem.insert(linear_traj(1));
    const auto b = sample_batch(mem, 4, 0);
    ASSERT_EQ(b.size(), 4u);
    for (const auto& s : b) EXPECT_EQ(s, mem.trajectories()[0].steps[0]);
}

TEST(SampleBatch, EmptyMemoryThrows) {
    ExperienceMemory mem;
    EXPECT_THROW(sample_batch(mem, 1, 0), InvalidArgument);
}

TEST(Serialization, EmptyMemory) {
    ExperienceMemory mem;
    EXPECT_EQ(serialize_memory(mem), "");
    EXPECT_EQ(deserialize_memory(""), mem);
}

TEST(Serialization, RoundTripIsCanonical) {
    ExperienceMemory mem;
    mem.insert(scored_traj());
    for (const auto& t : chain::dataset(2, 0.5, 5)) mem.insert(t);
    const std::string once = serialize_memory(mem);
    const ExperienceMemory back = deserialize_memory(once);
    EXPECT_EQ(back, mem);
    EXPECT_EQ(serialize_memory(back), once);
}

TEST(Serialization, FieldOrder) {
    const std::string line = serialize_trajectory(scored_traj());
    const auto pos = [&](const char* k) { return line.find(std::string("\"") + k + "\""); };
    EXPECT_LT(pos("task_id"), pos("task_description"));
    EXPECT_LT(pos("task_description"), pos("steps"));
    EXPECT_LT(pos("steps"), pos("final_score"));
    EXPECT_LT(pos("final_score"), pos("success"));
    EXPECT_LT(pos("observation"), pos("inventory"));
    EXPECT_LT(pos("free_look"), pos("action"));
}

TEST(Serialization, TruncatedLineNamesLine) {
    ExperienceMemory mem;
    mem.insert(scored_traj());
    mem.insert(scored_traj());
    std::string data = serialize_memory(mem);
    data.resize(data.size() - 20);
    try {
        deserialize_memory(data);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2u);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Serialization, UnknownFieldStrictAndLenient) {
    std::string line = serialize_trajectory(scored_traj());
    line.insert(1, "\"extra\":1,");
    EXPECT_THROW(deserialize_memory(line), ParseError);
    std::vector<std::string> warnings;
    const auto mem = deserialize_memory(line, ParseOptions{false}, &warnings);
    EXPECT_EQ(mem.size(), 1u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("extra"), std::string::npos);
}

TEST(Serialization, FileRoundTrip) {
    ExperienceMemory mem;
    for (const auto& t : chain::dataset(5, 0.5, 9)) mem.insert(t);
    const auto path = std::filesystem::temp_directory_path() / "agentcritic_mem_test.jsonl";
    save_memory(mem, path);
    EXPECT_EQ(load_memory(path), mem);
    std::filesystem::remove(path);
    EXPECT_THROW(load_memory(path), IoError);
}
