#include "agentcritic/experience.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "agentcritic/error.hpp"
#include "agentcritic/rng.hpp"
#include "agentcritic/text.hpp"
#include "json.hpp"

namespace agentcritic {

using ojson = nlohmann::ordered_json;

std::string EnvState::text() const {
    std::string out = observation;
    for (const std::string* part : {&inventory, &free_look}) {
        if (part->empty()) continue;
        if (!out.empty()) out += '\n';
        out += *part;
    }
    return out;
}

ActionText::ActionText(std::string text) : text_(std::move(text)) {
    if (text::trim(text_).empty()) throw InvalidArgument("action text is blank");
}

EnvState implied_final_state(const EnvState& last) {
    EnvState s = last;
    s.step_index = last.step_index + 1;
    return s;
}

void validate(const Trajectory& traj) {
    std::vector<std::string> problems;
    if (text::trim(traj.task.description).empty()) problems.emplace_back("task description is empty");
    if (traj.steps.empty()) problems.emplace_back("empty trajectory");
    if (!(traj.final_score >= 0.0 && traj.final_score <= 100.0))
        problems.emplace_back("final_score outside [0, 100]");
    if (traj.success && traj.final_score != 100.0) problems.emplace_back("success requires final_score 100");

    double total = 0.0;
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        const Step& s = traj.steps[i];
        const std::string at = "step " + std::to_string(i) + ": ";
        if (text::trim(s.state.observation).empty()) problems.push_back(at + "observation is empty");
        if (text::trim(s.action.str()).empty()) problems.push_back(at + "action is blank");
        if (!std::isfinite(s.reward)) problems.push_back(at + "reward is not finite");
        total += s.reward;
        const bool last = i + 1 == traj.steps.size();
        if (s.done && !last) problems.push_back(at + "done before the final step");
        if (s.next_state.step_index <= s.state.step_index)
            problems.push_back(at + "step_index does not increase");
        if (!last && !(s.next_state == traj.steps[i + 1].state))
            problems.push_back(at + "next_state does not match the following state");
    }
    if (!traj.steps.empty() && std::abs(total - traj.final_score) > 1e-9 * std::max(1.0, traj.final_score))
        problems.push_back("step rewards sum to " + std::to_string(total) + " but final_score is " +
                           std::to_string(traj.final_score));

    if (!problems.empty()) {
        std::string msg = "invalid trajectory '" + traj.task.id + "':";
        for (const auto& p : problems) msg += " " + p + ";";
        throw InvalidArgument(msg);
    }
}

namespace {

std::string render_context(const Trajectory& traj, std::size_t upto, std::size_t window) {
    std::string ctx = "Task: " + traj.task.description + "\n";
    const std::size_t first = upto > window ? upto - window : 0;
    for (std::size_t j = first; j < upto; ++j) {
        ctx += "State: " + traj.steps[j].state.text() + "\n";
        ctx += "Action: " + traj.steps[j].action.str() + "\n";
    }
    ctx += "State: " + traj.steps[upto].state.text() + "\n";
    return ctx;
}

} // namespace

std::vector<IlInstance> decompose_to_il_instances(const Trajectory& traj, std::size_t window) {
    if (traj.steps.empty()) throw InvalidArgument("empty trajectory");
    if (window < 1) throw InvalidArgument("history window must be >= 1");
    std::vector<IlInstance> out;
    out.reserve(traj.steps.size());
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
        out.push_back({render_context(traj, i, window), traj.steps[i].action});
    }
    return out;
}

RewardMode parse_reward_mode(std::string_view name) {
    if (name == "delta") return RewardMode::delta;
    if (name == "terminal") return RewardMode::terminal;
    throw ConfigError("unknown reward mode '" + std::string(name) + "' (expected delta|terminal)");
}

std::string_view to_string(RewardMode mode) { return mode == RewardMode::delta ? "delta" : "terminal"; }

std::vector<Step> decompose_to_steps(const Trajectory& traj, RewardMode mode) {
    std::vector<Step> out = traj.steps;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (mode == RewardMode::delta) {
            out[i].reward = traj.steps[i].reward / 100.0;
        } else {
            out[i].reward = i + 1 == out.size() ? traj.final_score / 100.0 : 0.0;
        }
    }
    return out;
}

void ExperienceMemory::insert(Trajectory traj) {
    validate(traj);
    const std::size_t t = trajectories_.size();
    for (std::size_t i = 0; i < traj.steps.size(); ++i) step_view_.push_back({t, i});
    trajectories_.push_back(std::move(traj));
}

const Step& ExperienceMemory::step(const StepRef& ref) const {
    return trajectories_.at(ref.trajectory).steps.at(ref.step);
}

const Task& ExperienceMemory::task_of(const StepRef& ref) const { return trajectories_.at(ref.trajectory).task; }

std::vector<Step> sample_batch(const ExperienceMemory& mem, std::size_t n, std::uint64_t seed) {
    if (mem.step_count() == 0) throw InvalidArgument("cannot sample from an empty memory");
    Rng rng(seed);
    std::vector<Step> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(mem.step(mem.step_view()[rng.index(mem.step_count())]));
    return out;
}

std::string serialize_trajectory(const Trajectory& traj) {
    ojson steps = ojson::array();
    for (const Step& s : traj.steps) {
        steps.push_back(ojson{{"observation", s.state.observation},
                              {"inventory", s.state.inventory},
                              {"free_look", s.state.free_look},
                              {"action", s.action.str()},
                              {"reward", s.reward},
                              {"done", s.done}});
    }
    ojson rec{{"task_id", traj.task.id},
              {"task_description", traj.task.description},
              {"steps", std::move(steps)},
              {"final_score", traj.final_score},
              {"success", traj.success}};
    return rec.dump();
}

namespace {

template <typename T>
T take(const ojson& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", line_no);
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(std::string("field '") + key + "' has the wrong type", line_no);
    }
}

void check_fields(const ojson& obj, std::initializer_list<const char*> allowed, const std::string& where,
                  std::size_t line_no, const ParseOptions& opts, std::vector<std::string>* warnings) {
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (known) continue;
        std::string msg = "unknown field '" + key + "' in " + where;
        if (opts.strict) throw ParseError(msg, line_no);
        if (warnings) warnings->push_back("line " + std::to_string(line_no) + ": " + msg);
    }
}

} // namespace

Trajectory parse_trajectory(std::string_view line, std::size_t line_no, const ParseOptions& opts,
                            std::vector<std::string>* warnings) {
    ojson rec;
    try {
        rec = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", line_no);
    check_fields(rec, {"task_id", "task_description", "steps", "final_score", "success"}, "trajectory", line_no,
                 opts, warnings);

    Trajectory traj;
    traj.task.id = take<std::string>(rec, "task_id", line_no);
    traj.task.description = take<std::string>(rec, "task_description", line_no);
    traj.final_score = take<double>(rec, "final_score", line_no);
    traj.success = take<bool>(rec, "success", line_no);
    const ojson& steps = rec.contains("steps") ? rec["steps"] : throw ParseError("missing field 'steps'", line_no);
    if (!steps.is_array()) throw ParseError("field 'steps' is not an array", line_no);

    std::vector<EnvState> states;
    std::vector<std::pair<std::string, std::pair<double, bool>>> acts;
    for (const ojson& s : steps) {
        if (!s.is_object()) throw ParseError("step is not an object", line_no);
        check_fields(s, {"observation", "inventory", "free_look", "action", "reward", "done"}, "step", line_no, opts,
                     warnings);
        EnvState st{take<std::string>(s, "observation", line_no), take<std::string>(s, "inventory", line_no),
                    take<std::string>(s, "free_look", line_no), static_cast<std::uint32_t>(states.size())};
        states.push_back(std::move(st));
        acts.push_back({take<std::string>(s, "action", line_no),
                        {take<double>(s, "reward", line_no), take<bool>(s, "done", line_no)}});
    }

    try {
        for (std::size_t i = 0; i < states.size(); ++i) {
            Step step;
            step.state = states[i];
            step.action = ActionText(acts[i].first);
            step.reward = acts[i].second.first;
            step.done = acts[i].second.second;
            step.next_state = i + 1 < states.size() ? states[i + 1] : implied_final_state(states[i]);
            traj.steps.push_back(std::move(step));
        }
        validate(traj);
    } catch (const InvalidArgument& e) {
        throw ParseError(e.what(), line_no);
    }
    return traj;
}

std::string serialize_memory(const ExperienceMemory& mem) {
    std::string out;
    for (const Trajectory& t : mem.trajectories()) {
        out += serialize_trajectory(t);
        out += '\n';
    }
    return out;
}

ExperienceMemory deserialize_memory(std::string_view data, const ParseOptions& opts,
                                    std::vector<std::string>* warnings) {
    ExperienceMemory mem;
    std::size_t line_no = 0;
    while (!data.empty()) {
        ++line_no;
        const std::size_t nl = data.find('\n');
        std::string_view line = data.substr(0, nl);
        data = nl == std::string_view::npos ? std::string_view{} : data.substr(nl + 1);
        if (text::trim(line).empty()) continue;
        mem.insert(parse_trajectory(line, line_no, opts, warnings));
    }
    return mem;
}

void save_memory(const ExperienceMemory& mem, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << serialize_memory(mem);
    if (!out) throw IoError("failed writing " + path.string());
}

ExperienceMemory load_memory(const std::filesystem::path& path, const ParseOptions& opts,
                             std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_memory(buf.str(), opts, warnings);
}

} // namespace agentcritic
