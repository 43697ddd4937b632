#include "agentcritic/textlab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "agentcritic/error.hpp"
#include "agentcritic/rng.hpp"
#include "agentcritic/text.hpp"

namespace agentcritic::textlab {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt_points(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string article(const std::string& noun) {
    if (!noun.empty() && std::string_view("aeiou").find(noun[0]) != std::string_view::npos) return "an " + noun;
    return "a " + noun;
}

enum class ActKind { go_left, go_right, look, take, put };

struct Act {
    ActKind kind;
    std::int32_t object = -1;
    std::int32_t receptacle = -1;
};

std::vector<std::pair<ActionText, Act>> enumerate(const EnvSpec& spec, const LabState& s) {
    std::vector<std::pair<ActionText, Act>> out;
    if (s.terminal()) return out;
    if (s.room > 0) out.push_back({ActionText("go left"), {ActKind::go_left}});
    if (s.room + 1 < spec.n_rooms) out.push_back({ActionText("go right"), {ActKind::go_right}});
    out.push_back({ActionText("look"), {ActKind::look}});
    if (s.carried < 0) {
        for (std::size_t o = 0; o < spec.objects.size(); ++o)
            if (s.where[o] == std::int32_t(s.room))
                out.push_back({ActionText("take " + spec.objects[o].name), {ActKind::take, std::int32_t(o)}});
    } else {
        const std::string& obj = spec.objects[std::size_t(s.carried)].name;
        for (std::size_t r = 0; r < spec.receptacles.size(); ++r)
            if (spec.receptacles[r].room == s.room)
                out.push_back({ActionText("put " + obj + " in " + spec.receptacles[r].name),
                               {ActKind::put, s.carried, std::int32_t(r)}});
    }
    return out;
}

std::size_t find_task(const EnvSpec& spec, std::string_view task_id) {
    for (std::size_t i = 0; i < spec.tasks.size(); ++i)
        if (spec.tasks[i].id == task_id) return i;
    throw InvalidArgument("unknown task '" + std::string(task_id) + "' in environment '" + spec.name + "'");
}

template <class T>
std::int32_t index_of(const std::vector<T>& items, const std::string& name) {
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].name == name) return std::int32_t(i);
    return -1;
}

} // namespace

// ---- spec -------------------------------------------------------------------

void validate(const EnvSpec& spec) {
    std::vector<std::string> problems;
    if (spec.n_rooms == 0) problems.emplace_back("n_rooms must be positive");
    const auto& sch = spec.score_schedule;
    for (double x : {sch.pickup, sch.correct_room, sch.deposit})
        if (!std::isfinite(x) || x < 0.0) problems.emplace_back("score schedule entries must be finite and >= 0");
    if (sch.pickup + sch.correct_room + sch.deposit != 100.0)
        problems.emplace_back("score schedule must add up to 100");
    auto check_names = [&](const auto& items, const char* what) {
        for (std::size_t i = 0; i < items.size(); ++i) {
            const auto& it = items[i];
            if (text::trim(it.name).empty() || it.name != text::to_lower(text::trim(it.name)) ||
                it.name.find(' ') != std::string::npos)
                problems.push_back(std::string(what) + " name '" + it.name + "' must be one lowercase word");
            if (it.room >= spec.n_rooms)
                problems.push_back(std::string(what) + " '" + it.name + "' is in room " + std::to_string(it.room) +
                                   " but there are " + std::to_string(spec.n_rooms) + " rooms");
            for (std::size_t j = 0; j < i; ++j)
                if (items[j].name == it.name) problems.push_back(std::string(what) + " '" + it.name + "' repeated");
        }
    };
    check_names(spec.objects, "object");
    check_names(spec.receptacles, "receptacle");
    for (const auto& o : spec.objects)
        if (index_of(spec.receptacles, o.name) >= 0)
            problems.push_back("'" + o.name + "' is both an object and a receptacle");
    if (spec.tasks.empty()) problems.emplace_back("no tasks");
    for (std::size_t i = 0; i < spec.tasks.size(); ++i) {
        const TaskSpec& t = spec.tasks[i];
        if (t.id.empty()) problems.emplace_back("task with empty id");
        if (index_of(spec.objects, t.object) < 0)
            problems.push_back("task '" + t.id + "' names unknown object '" + t.object + "'");
        if (index_of(spec.receptacles, t.receptacle) < 0)
            problems.push_back("task '" + t.id + "' names unknown receptacle '" + t.receptacle + "'");
        for (std::size_t j = 0; j < i; ++j)
            if (spec.tasks[j].id == t.id) problems.push_back("task id '" + t.id + "' repeated");
    }
    if (spec.step_cap == 0) problems.emplace_back("step_cap must be positive");
    if (!(spec.gamma_hint >= 0.0 && spec.gamma_hint <= 1.0)) problems.emplace_back("gamma_hint must be in [0, 1]");
    if (!problems.empty()) {
        std::string msg = "invalid environment spec";
        if (!spec.name.empty()) msg += " '" + spec.name + "'";
        for (const auto& p : problems) msg += "; " + p;
        throw ConfigError(msg);
    }
}

EnvSpec env_spec_from_json(std::string_view text) {
    EnvSpec spec;
    try {
        const ojson j = ojson::parse(text);
        static const std::vector<std::string> known = {"name",          "n_rooms",  "objects",   "receptacles", "tasks",
                                                       "score_schedule", "step_cap", "gamma_hint"};
        for (const auto& [k, v] : j.items())
            if (std::find(known.begin(), known.end(), k) == known.end())
                throw ConfigError("environment spec: unknown field '" + k + "'");
        for (const char* req : {"n_rooms", "objects", "receptacles", "tasks", "score_schedule", "step_cap"})
            if (!j.contains(req)) throw ConfigError(std::string("environment spec: missing field '") + req + "'");
        spec.name = j.value("name", std::string{});
        spec.n_rooms = j.at("n_rooms").get<std::uint32_t>();
        for (const auto& o : j.at("objects")) spec.objects.push_back({o.at("name"), o.at("room")});
        for (const auto& r : j.at("receptacles")) spec.receptacles.push_back({r.at("name"), r.at("room")});
        for (const auto& t : j.at("tasks")) spec.tasks.push_back({t.at("id"), t.at("object"), t.at("receptacle")});
        const auto& s = j.at("score_schedule");
        spec.score_schedule = {s.at("pickup").get<double>(), s.at("correct_room").get<double>(),
                               s.at("deposit").get<double>()};
        spec.step_cap = j.at("step_cap").get<std::size_t>();
        spec.gamma_hint = j.value("gamma_hint", 0.9);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("environment spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

std::string env_spec_to_json(const EnvSpec& spec) {
    ojson j;
    j["name"] = spec.name;
    j["n_rooms"] = spec.n_rooms;
    j["objects"] = ojson::array();
    for (const auto& o : spec.objects) j["objects"].push_back({{"name", o.name}, {"room", o.room}});
    j["receptacles"] = ojson::array();
    for (const auto& r : spec.receptacles) j["receptacles"].push_back({{"name", r.name}, {"room", r.room}});
    j["tasks"] = ojson::array();
    for (const auto& t : spec.tasks)
        j["tasks"].push_back({{"id", t.id}, {"object", t.object}, {"receptacle", t.receptacle}});
    j["score_schedule"] = {{"pickup", spec.score_schedule.pickup},
                           {"correct_room", spec.score_schedule.correct_room},
                           {"deposit", spec.score_schedule.deposit}};
    j["step_cap"] = spec.step_cap;
    j["gamma_hint"] = spec.gamma_hint;
    return j.dump(2) + "\n";
}

EnvSpec load_env_spec(const std::string& path_or_fixture) {
    const auto names = fixture_names();
    if (std::find(names.begin(), names.end(), path_or_fixture) != names.end() &&
        !std::filesystem::exists(path_or_fixture))
        return fixture(path_or_fixture);
    std::ifstream in(path_or_fixture, std::ios::binary);
    if (!in) throw IoError("cannot open environment spec '" + path_or_fixture + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return env_spec_from_json(ss.str());
}

std::vector<std::string> fixture_names() { return {"lab3", "lab5-sparse", "lab7"}; }

EnvSpec fixture(std::string_view name) {
    EnvSpec s;
    s.name = std::string(name);
    if (name == "lab3") {
        s.n_rooms = 3;
        s.objects = {{"key", 0}, {"coin", 1}};
        s.receptacles = {{"bin", 1}, {"box", 2}, {"trash", 2}};
        s.tasks = {{"key-to-box", "key", "box"}};
    } else if (name == "lab5-sparse") {
        s.n_rooms = 5;
        s.objects = {{"ball", 0}, {"cup", 3}};
        s.receptacles = {{"crate", 2}, {"basket", 4}, {"sack", 4}};
        s.tasks = {{"ball-to-basket", "ball", "basket"}};
        s.score_schedule = {0.0, 0.0, 100.0};
    } else if (name == "lab7") {
        s.n_rooms = 7;
        s.objects = {{"key", 1}, {"coin", 3}, {"apple", 5}};
        s.receptacles = {{"fridge", 0}, {"bin", 3}, {"box", 6}};
        s.tasks = {{"key-to-box", "key", "box"}, {"apple-to-fridge", "apple", "fridge"}};
    } else {
        throw ConfigError("unknown environment fixture '" + std::string(name) + "'");
    }
    validate(s);
    return s;
}

// ---- state and dynamics -----------------------------------------------------

std::string LabState::key() const {
    std::string k = std::to_string(room) + "|" + std::to_string(carried) + "|";
    for (auto w : where) k += std::to_string(w) + ",";
    k += pickup_awarded ? "P" : "p";
    k += room_awarded ? "R" : "r";
    k += std::to_string(int(outcome));
    return k;
}

TextLab::TextLab(EnvSpec spec, std::string_view task_id) : spec_(std::move(spec)) {
    validate(spec_);
    task_index_ = find_task(spec_, task_id);
    const TaskSpec& t = spec_.tasks[task_index_];
    target_object_ = index_of(spec_.objects, t.object);
    target_receptacle_ = index_of(spec_.receptacles, t.receptacle);
    task_ = Task{t.id, "Move the " + t.object + " to the " + t.receptacle + "."};
}

LabState TextLab::initial_state() const {
    LabState s;
    for (const auto& o : spec_.objects) s.where.push_back(std::int32_t(o.room));
    return s;
}

EnvState TextLab::render(const LabState& s, std::uint32_t step_index) const {
    EnvState e;
    e.step_index = step_index;
    e.observation = "You are in room " + std::to_string(s.room) + " of " + std::to_string(spec_.n_rooms) +
                    ". Your score is " + fmt_points(s.score) + ".";
    if (s.outcome == Outcome::success) e.observation += " The task is complete.";
    if (s.outcome == Outcome::failed) e.observation += " The task has failed.";
    e.inventory = s.carried < 0 ? "You are carrying nothing."
                                : "You are carrying the " + spec_.objects[std::size_t(s.carried)].name + ".";
    std::vector<std::string> seen;
    for (std::size_t o = 0; o < spec_.objects.size(); ++o)
        if (s.where[o] == std::int32_t(s.room)) seen.push_back(article(spec_.objects[o].name));
    for (std::size_t r = 0; r < spec_.receptacles.size(); ++r) {
        if (spec_.receptacles[r].room != s.room) continue;
        std::string item = article(spec_.receptacles[r].name);
        std::vector<std::string> inside;
        for (std::size_t o = 0; o < spec_.objects.size(); ++o)
            if (s.where[o] == LabState::kInReceptacleBase - std::int32_t(r)) inside.push_back(spec_.objects[o].name);
        if (!inside.empty()) {
            item += " holding";
            for (std::size_t i = 0; i < inside.size(); ++i) item += (i ? " and " : " ") + article(inside[i]);
        }
        seen.push_back(item);
    }
    if (seen.empty()) {
        e.free_look = "You see nothing of interest.";
    } else {
        e.free_look = "You see";
        for (std::size_t i = 0; i < seen.size(); ++i) e.free_look += (i ? ", " : " ") + seen[i];
        e.free_look += ".";
    }
    return e;
}

std::vector<ActionText> TextLab::valid_actions(const LabState& s) const {
    std::vector<ActionText> out;
    for (auto& [text, act] : enumerate(spec_, s)) out.push_back(std::move(text));
    return out;
}

LabTransition TextLab::step(const LabState& s, const ActionText& action) const {
    LabTransition tr{s, 0.0, 0.0, s.terminal()};
    if (s.terminal()) return tr;
    const std::string want = text::fold(action.str());
    const auto acts = enumerate(spec_, s);
    auto it = std::find_if(acts.begin(), acts.end(), [&](const auto& p) { return p.first.str() == want; });
    if (it == acts.end()) return tr; // nothing happens

    LabState& n = tr.state;
    const auto& sch = spec_.score_schedule;
    const std::uint32_t goal_room = spec_.receptacles[std::size_t(target_receptacle_)].room;
    auto award = [&](double pts) {
        n.score += pts;
        tr.points += pts;
    };
    auto maybe_room_award = [&] {
        if (n.carried == target_object_ && n.room == goal_room && !n.room_awarded) {
            n.room_awarded = true;
            award(sch.correct_room);
        }
    };
    const Act& a = it->second;
    switch (a.kind) {
    case ActKind::go_left:
        --n.room;
        maybe_room_award();
        break;
    case ActKind::go_right:
        ++n.room;
        maybe_room_award();
        break;
    case ActKind::look:
        break;
    case ActKind::take:
        n.carried = a.object;
        n.where[std::size_t(a.object)] = LabState::kCarried;
        if (a.object == target_object_ && !n.pickup_awarded) {
            n.pickup_awarded = true;
            award(sch.pickup);
        }
        maybe_room_award();
        break;
    case ActKind::put:
        n.carried = -1;
        n.where[std::size_t(a.object)] = LabState::kInReceptacleBase - a.receptacle;
        if (a.object == target_object_) {
            if (a.receptacle == target_receptacle_) {
                n.outcome = Outcome::success;
                award(sch.deposit);
            } else {
                n.outcome = Outcome::failed;
            }
        }
        break;
    }
    tr.reward = tr.points / 100.0;
    tr.done = n.terminal();
    return tr;
}

std::pair<LabState, EnvState> reset(const EnvSpec& spec, std::string_view task_id, std::uint64_t /*seed*/) {
    // Placement is fixed by the spec; the seed is accepted for interface symmetry.
    TextLab lab(spec, task_id);
    LabState s = lab.initial_state();
    return {s, lab.render(s, 0)};
}

LabTransition step_env(const EnvSpec& spec, std::string_view task_id, const LabState& state,
                       const ActionText& action) {
    return TextLab(spec, task_id).step(state, action);
}

std::vector<ActionText> valid_actions(const EnvSpec& spec, const LabState& state) {
    std::vector<ActionText> out;
    for (auto& [text, act] : enumerate(spec, state)) out.push_back(std::move(text));
    return out;
}

LabEnv::LabEnv(EnvSpec spec, std::string_view task_id, std::uint64_t /*seed*/)
    : lab_(std::move(spec), task_id), state_(lab_.initial_state()) {}

EnvStepResult LabEnv::step(const ActionText& action) {
    if (state_.terminal() || steps_ >= lab_.spec().step_cap)
        throw InvalidArgument("step on a finished episode");
    LabTransition tr = lab_.step(state_, action);
    state_ = std::move(tr.state);
    ++steps_;
    EnvStepResult r;
    r.reward = tr.reward;
    r.terminal = tr.done;
    r.truncated = !tr.done && steps_ >= lab_.spec().step_cap;
    return r;
}

// ---- oracle -----------------------------------------------------------------

const std::vector<ActionValue>& QTable::at(const LabState& s) const {
    auto it = index_.find(s.key());
    if (it == index_.end()) throw InvalidArgument("state not in Q table: " + s.key());
    return values_[it->second];
}

double QTable::q(const LabState& s, const ActionText& a) const {
    for (const auto& av : at(s))
        if (av.action == a) return av.q;
    throw InvalidArgument("action '" + a.str() + "' is not valid in state " + s.key());
}

double QTable::v(const LabState& s) const {
    const auto& avs = at(s);
    double best = 0.0;
    for (std::size_t i = 0; i < avs.size(); ++i) best = i == 0 ? avs[i].q : std::max(best, avs[i].q);
    return best;
}

ActionText QTable::best_action(const LabState& s) const {
    const auto& avs = at(s);
    if (avs.empty()) throw InvalidArgument("terminal state has no actions");
    std::size_t best = 0;
    for (std::size_t i = 1; i < avs.size(); ++i)
        if (avs[i].q > avs[best].q) best = i;
    return avs[best].action;
}

std::optional<ActionText> QTable::worst_action(const LabState& s) const {
    const auto& avs = at(s);
    if (avs.size() < 2) return std::nullopt;
    const ActionText best = best_action(s);
    std::optional<std::size_t> worst;
    for (std::size_t i = 0; i < avs.size(); ++i) {
        if (avs[i].action == best) continue;
        if (!worst || avs[i].q < avs[*worst].q) worst = i;
    }
    return avs[*worst].action;
}

QTable value_iteration_q(const EnvSpec& spec, std::string_view task_id, double gamma, std::size_t max_states) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must be in [0, 1]");
    TextLab lab(spec, task_id);
    QTable table;

    struct Edge {
        std::size_t next;
        double reward;
        bool done;
    };
    std::vector<std::vector<Edge>> edges;
    std::deque<std::size_t> frontier;
    auto intern = [&](const LabState& s) {
        auto [it, fresh] = table.index_.try_emplace(s.key(), table.states_.size());
        if (fresh) {
            if (table.states_.size() >= max_states)
                throw NumericError("state space exceeds the bound of " + std::to_string(max_states) + " states");
            table.states_.push_back(s);
            frontier.push_back(it->second);
        }
        return it->second;
    };
    intern(lab.initial_state());
    while (!frontier.empty()) {
        const std::size_t i = frontier.front();
        frontier.pop_front();
        const LabState s = table.states_[i];
        std::vector<Edge> out;
        std::vector<ActionValue> avs;
        for (const ActionText& a : lab.valid_actions(s)) {
            LabTransition tr = lab.step(s, a);
            out.push_back({intern(tr.state), tr.reward, tr.done});
            avs.push_back({a, 0.0});
        }
        if (edges.size() <= i) {
            edges.resize(i + 1);
            table.values_.resize(i + 1);
        }
        edges[i] = std::move(out);
        table.values_[i] = std::move(avs);
    }

    const std::size_t n = table.states_.size();
    std::vector<double> v(n, 0.0), v_next(n, 0.0);
    constexpr std::size_t kMaxSweeps = 1000000;
    for (;;) {
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = 0.0;
            for (std::size_t a = 0; a < edges[i].size(); ++a) {
                const Edge& e = edges[i][a];
                const double q = e.reward + (e.done ? 0.0 : gamma * v[e.next]);
                table.values_[i][a].q = q;
                best = a == 0 ? q : std::max(best, q);
            }
            v_next[i] = best;
            diff = std::max(diff, std::abs(v_next[i] - v[i]));
        }
        v.swap(v_next);
        ++table.sweeps_;
        if (diff <= 1e-12) break;
        if (table.sweeps_ >= kMaxSweeps) throw NumericError("value iteration did not converge");
    }
    return table;
}

// ---- data collection --------------------------------------------------------

BehaviorPolicy parse_behavior(std::string_view kind, double epsilon) {
    if (kind == "optimal") return {BehaviorKind::optimal, 0.0};
    if (kind == "uniform_random" || kind == "random") return {BehaviorKind::uniform_random, 1.0};
    if (kind == "epsilon_greedy") {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
        return {BehaviorKind::epsilon_greedy, epsilon};
    }
    throw ConfigError("unknown behavior policy '" + std::string(kind) +
                      "' (expected optimal, epsilon_greedy or uniform_random)");
}

std::vector<Trajectory> behavior_rollout(const EnvSpec& spec, const BehaviorPolicy& behavior, std::size_t n,
                                         std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("behavior_rollout needs n >= 1");
    if (behavior.kind == BehaviorKind::epsilon_greedy && !(behavior.epsilon >= 0.0 && behavior.epsilon <= 1.0))
        throw InvalidArgument("epsilon must be in [0, 1]");
    std::vector<TextLab> labs;
    std::vector<QTable> tables;
    for (const auto& t : spec.tasks) {
        labs.emplace_back(spec, t.id);
        if (behavior.kind != BehaviorKind::uniform_random)
            tables.push_back(value_iteration_q(spec, t.id, spec.gamma_hint));
    }
    std::vector<Trajectory> out;
    out.reserve(n);
    for (std::size_t ep = 0; ep < n; ++ep) {
        const std::size_t ti = ep % spec.tasks.size();
        const TextLab& lab = labs[ti];
        Rng rng(derive_seed(seed, ep));
        Trajectory traj;
        traj.task = lab.task();
        LabState s = lab.initial_state();
        for (std::uint32_t t = 0; t < spec.step_cap && !s.terminal(); ++t) {
            const auto acts = lab.valid_actions(s);
            ActionText a;
            switch (behavior.kind) {
            case BehaviorKind::optimal:
                a = tables[ti].best_action(s);
                break;
            case BehaviorKind::epsilon_greedy:
                a = rng.uniform() < behavior.epsilon ? acts[rng.index(acts.size())] : tables[ti].best_action(s);
                break;
            case BehaviorKind::uniform_random:
                a = acts[rng.index(acts.size())];
                break;
            }
            LabTransition tr = lab.step(s, a);
            Step st;
            st.state = lab.render(s, t);
            st.action = a;
            st.reward = tr.points;
            st.done = tr.done;
            st.next_state = lab.render(tr.state, t + 1);
            traj.steps.push_back(std::move(st));
            s = std::move(tr.state);
        }
        // Files do not store the state after the last action; keep generated data identical to loaded data.
        traj.steps.back().next_state = implied_final_state(traj.steps.back().state);
        traj.final_score = s.score;
        traj.success = s.outcome == Outcome::success;
        out.push_back(std::move(traj));
    }
    return out;
}

namespace {

std::string paraphrase(const std::string& action, const EnvSpec& spec) {
    if (action == "go left") return "walk to the left";
    if (action == "go right") return "walk to the right";
    if (action == "look") return "look around";
    if (action.rfind("take ", 0) == 0) return "pick up the " + action.substr(5);
    if (action.rfind("put ", 0) == 0) {
        for (const auto& r : spec.receptacles) {
            const std::string tail = " in " + r.name;
            if (action.size() > tail.size() && action.compare(action.size() - tail.size(), tail.size(), tail) == 0)
                return "place the " + action.substr(4, action.size() - 4 - tail.size()) + " into the " + r.name;
        }
    }
    return action + " now";
}

} // namespace

MockTable build_mock_table(const EnvSpec& spec, double gamma) {
    MockTable table;
    for (const auto& t : spec.tasks) {
        TextLab lab(spec, t.id);
        const QTable q = value_iteration_q(spec, t.id, gamma);
        for (const LabState& s : q.states()) {
            if (s.terminal()) continue;
            // Hidden object positions can collide on the rendered text; the first state found wins.
            const std::string key = mock_table_key(lab.task(), lab.render(s, 0));
            if (table.entries.count(key)) continue;
            std::vector<ActionValue> ranked = q.at(s);
            std::stable_sort(ranked.begin(), ranked.end(),
                             [](const ActionValue& a, const ActionValue& b) { return a.q > b.q; });
            std::vector<MockEntry> entries;
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                const double ll = i == 0 ? -0.2 : -1.2 - 0.8 * double(i - 1);
                entries.push_back({ranked[i].action.str(), ll});
            }
            entries.push_back({paraphrase(ranked[0].action.str(), spec), -1.6});
            table.entries.emplace(key, std::move(entries));
            if (auto w = q.worst_action(s)) table.wrong_action.emplace(key, w->str());
        }
    }
    return table;
}

std::size_t optimal_path_length(const EnvSpec& spec, std::string_view task_id, double gamma) {
    TextLab lab(spec, task_id);
    const QTable q = value_iteration_q(spec, task_id, gamma);
    LabState s = lab.initial_state();
    std::size_t steps = 0;
    while (!s.terminal()) {
        if (steps >= spec.step_cap) throw NumericError("optimal policy does not finish within the step cap");
        s = lab.step(s, q.best_action(s)).state;
        ++steps;
    }
    return steps;
}

} // namespace agentcritic::textlab
