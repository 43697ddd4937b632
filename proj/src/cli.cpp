#include "agentcritic/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "agentcritic/error.hpp"
#include "agentcritic/textlab.hpp"

namespace agentcritic::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---- config -----------------------------------------------------------------

void RunConfig::validate() const {
    rescore.validate();
    iql.validate();
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must be in [0, 1]");
    if (!(mock_error_rate >= 0.0 && mock_error_rate <= 1.0)) throw ConfigError("mock_error_rate must be in [0, 1]");
    if (collect_episodes < 1) throw ConfigError("collect_episodes must be >= 1");
    if (episodes < 1) throw ConfigError("episodes must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
    if (iql.dims.vocab_size < 1 || iql.dims.embed_dim < 1 || iql.dims.hidden_dim < 1)
        throw ConfigError("network dimensions must be positive");
    textlab::parse_behavior(behavior, epsilon);
}

std::string to_json(const RunConfig& c) {
    ojson j;
    j["env"] = c.env;
    j["policy"] = c.policy;
    j["critic"] = c.critic ? ojson(*c.critic) : ojson(nullptr);
    j["data"] = c.data ? ojson(*c.data) : ojson(nullptr);
    j["embedder"] = c.embedder ? ojson(*c.embedder) : ojson(nullptr);
    j["seed"] = c.seed;
    j["out"] = c.out;
    j["jobs"] = c.jobs;
    j["b"] = c.rescore.b;
    j["d"] = c.rescore.d;
    j["k"] = c.rescore.k;
    j["static_alpha"] = c.rescore.static_alpha ? ojson(*c.rescore.static_alpha) : ojson(nullptr);
    j["tau"] = c.iql.tau;
    j["gamma"] = c.iql.gamma;
    j["epochs"] = c.iql.epochs;
    j["batch_size"] = c.iql.batch_size;
    j["rho"] = c.iql.rho;
    j["lr"] = c.iql.adam.lr;
    j["twin_q"] = c.iql.twin_q;
    j["vocab_size"] = c.iql.dims.vocab_size;
    j["embed_dim"] = c.iql.dims.embed_dim;
    j["hidden_dim"] = c.iql.dims.hidden_dim;
    j["layout"] = std::string(to_string(c.iql.layout));
    j["reward_mode"] = std::string(to_string(c.iql.reward_mode));
    j["behavior"] = c.behavior;
    j["epsilon"] = c.epsilon;
    j["collect_episodes"] = c.collect_episodes;
    j["episodes"] = c.episodes;
    j["max_steps"] = c.max_steps;
    j["temperature"] = c.temperature;
    j["top_p"] = c.top_p;
    j["mock_error_rate"] = c.mock_error_rate;
    return j.dump(2) + "\n";
}

namespace {

template <class T>
void read_opt(const ojson& j, const char* key, std::optional<T>& dst) {
    if (!j.contains(key)) return;
    if (j[key].is_null()) {
        dst.reset();
    } else {
        dst = j[key].get<T>();
    }
}

template <class T>
void read(const ojson& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j[key].get<T>();
}

} // namespace

RunConfig config_from_json(std::string_view text) {
    RunConfig c;
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    const ojson known = ojson::parse(to_json(RunConfig{}));
    for (const auto& [k, v] : j.items())
        if (!known.contains(k)) throw ConfigError("config: unknown key '" + k + "'");
    try {
        read(j, "env", c.env);
        read(j, "policy", c.policy);
        read_opt(j, "critic", c.critic);
        read_opt(j, "data", c.data);
        read_opt(j, "embedder", c.embedder);
        read(j, "seed", c.seed);
        read(j, "out", c.out);
        read(j, "jobs", c.jobs);
        read(j, "b", c.rescore.b);
        read(j, "d", c.rescore.d);
        read(j, "k", c.rescore.k);
        read_opt(j, "static_alpha", c.rescore.static_alpha);
        read(j, "tau", c.iql.tau);
        read(j, "gamma", c.iql.gamma);
        read(j, "epochs", c.iql.epochs);
        read(j, "batch_size", c.iql.batch_size);
        read(j, "rho", c.iql.rho);
        read(j, "lr", c.iql.adam.lr);
        read(j, "twin_q", c.iql.twin_q);
        read(j, "vocab_size", c.iql.dims.vocab_size);
        read(j, "embed_dim", c.iql.dims.embed_dim);
        read(j, "hidden_dim", c.iql.dims.hidden_dim);
        if (j.contains("layout")) c.iql.layout = parse_encoder_layout(j["layout"].get<std::string>());
        if (j.contains("reward_mode")) c.iql.reward_mode = parse_reward_mode(j["reward_mode"].get<std::string>());
        read(j, "behavior", c.behavior);
        read(j, "epsilon", c.epsilon);
        read(j, "collect_episodes", c.collect_episodes);
        read(j, "episodes", c.episodes);
        read(j, "max_steps", c.max_steps);
        read(j, "temperature", c.temperature);
        read(j, "top_p", c.top_p);
        read(j, "mock_error_rate", c.mock_error_rate);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.iql.seed = c.seed;
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_json(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int exit_code_for(const std::exception& e) {
    if (auto* ae = dynamic_cast<const Error*>(&e)) {
        if (ae->kind() == ErrorKind::invalid) return 2;
        return int(ae->kind());
    }
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    return 1;
}

// ---- commands ---------------------------------------------------------------

namespace {

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Timestamps go here so every other output stays byte-identical across reruns.
class Sidecar {
public:
    Sidecar(const RunConfig& cfg, std::string command)
        : path_(fs::path(cfg.out) / (command + "_info.json")), command_(std::move(command)), started_(utc_now()),
          t0_(std::chrono::steady_clock::now()) {}

    void finish() {
        ojson j;
        j["command"] = command_;
        j["started"] = started_;
        j["finished"] = utc_now();
        j["wall_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
        write_file(path_, j.dump(2) + "\n");
    }

private:
    fs::path path_;
    std::string command_;
    std::string started_;
    std::chrono::steady_clock::time_point t0_;
};

std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const textlab::EnvSpec& spec) {
    if (cfg.policy == "mock") {
        MockConfig mc;
        mc.error_rate = cfg.mock_error_rate;
        mc.seed = cfg.seed;
        return std::make_unique<MockPolicy>(textlab::build_mock_table(spec, spec.gamma_hint), mc);
    }
    if (cfg.policy.rfind("http://", 0) == 0) return std::make_unique<RemotePolicy>(cfg.policy);
    throw ConfigError("policy must be 'mock' or an http:// URL, got '" + cfg.policy + "'");
}

struct LoadedCritic {
    CriticParams params;
    std::unique_ptr<Critic> critic;
    std::unique_ptr<ActionScorer> scorer;
};

std::unique_ptr<LoadedCritic> load_scorer(const std::string& path) {
    auto lc = std::make_unique<LoadedCritic>();
    lc->params = load_critic(path);
    lc->critic = std::make_unique<Critic>(lc->params.arch);
    lc->scorer = std::make_unique<ActionScorer>(*lc->critic, lc->params);
    return lc;
}

EnvFactory lab_factory(const textlab::EnvSpec& spec) {
    return [spec](std::size_t i) -> std::unique_ptr<TextEnvironment> {
        return std::make_unique<textlab::LabEnv>(spec, spec.tasks[i % spec.tasks.size()].id);
    };
}

EpisodeOptions episode_options(const RunConfig& cfg, const Embedder* embedder) {
    EpisodeOptions o;
    o.sampling.k = cfg.rescore.k;
    o.sampling.temperature = cfg.temperature;
    o.sampling.top_p = cfg.top_p;
    o.max_steps = cfg.max_steps;
    o.embedder = embedder;
    return o;
}

std::unique_ptr<Embedder> make_embedder(const RunConfig& cfg) {
    if (!cfg.embedder) return nullptr;
    if (cfg.embedder->rfind("http://", 0) != 0)
        throw ConfigError("embedder must be an http:// URL, got '" + *cfg.embedder + "'");
    return std::make_unique<RemoteEmbedder>(*cfg.embedder);
}

// Every episode failing the same way means the setup is broken, not the agent.
void check_failures(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) return;
    for (const auto& r : records)
        if (r.status != EpisodeStatus::failed) return;
    const std::string msg = "all " + std::to_string(records.size()) + " episodes failed; first: " + records[0].error;
    switch (records[0].error_kind.value_or(ErrorKind::invalid)) {
    case ErrorKind::transport: throw TransportError(msg, 0);
    case ErrorKind::numeric: throw NumericError(msg);
    case ErrorKind::io: throw IoError(msg);
    case ErrorKind::config: throw ConfigError(msg);
    default: throw InvalidArgument(msg);
    }
}

ojson metrics_json(const std::string& label, const Metrics& m, const std::string& hash) {
    ojson j;
    j["label"] = label;
    j["n_episodes"] = m.n_episodes;
    j["AS"] = m.average_score;
    j["SR"] = m.success_rate;
    j["mean_steps"] = m.mean_steps;
    j["config_hash"] = hash;
    return j;
}

void cmd_collect(const RunConfig& cfg, std::ostream& out) {
    Sidecar side(cfg, "collect");
    const auto spec = textlab::load_env_spec(cfg.env);
    const auto trajs = textlab::behavior_rollout(spec, textlab::parse_behavior(cfg.behavior, cfg.epsilon),
                                                 cfg.collect_episodes, cfg.seed);
    ExperienceMemory mem;
    std::size_t wins = 0;
    for (const auto& t : trajs) {
        wins += t.success ? 1 : 0;
        mem.insert(t);
    }
    const fs::path path = fs::path(cfg.out) / "trajectories.jsonl";
    fs::create_directories(cfg.out);
    save_memory(mem, path);
    out << "collected " << mem.size() << " trajectories (" << mem.step_count() << " steps, SR "
        << 100.0 * double(wins) / double(mem.size()) << "%) -> " << path.string() << "\n";
    side.finish();
}

void cmd_train(const RunConfig& cfg, std::ostream& out) {
    Sidecar side(cfg, "train");
    const fs::path data = cfg.data ? fs::path(*cfg.data) : fs::path(cfg.out) / "trajectories.jsonl";
    const ExperienceMemory mem = load_memory(data);
    if (mem.empty()) throw IoError("no trajectories in " + data.string());
    IqlConfig iql = cfg.iql;
    iql.seed = cfg.seed;
    std::string log;
    const TrainResult res = train_iql(mem, iql, [&](const EpochLog& e) {
        log += training_log_line(e) + "\n";
        out << "epoch " << e.epoch << " loss_v " << e.mean_loss_v << " loss_q " << e.mean_loss_q << "\n";
    });
    fs::create_directories(cfg.out);
    save_critic(res.params, fs::path(cfg.out) / "critic.json");
    write_file(fs::path(cfg.out) / "train_log.jsonl", log);
    out << "critic -> " << (fs::path(cfg.out) / "critic.json").string() << "\n";
    side.finish();
}

void cmd_run(const RunConfig& cfg, std::ostream& out) {
    Sidecar side(cfg, "run");
    const auto spec = textlab::load_env_spec(cfg.env);
    const auto policy = make_policy(cfg, spec);
    const auto embedder = make_embedder(cfg);
    std::unique_ptr<LoadedCritic> critic;
    if (cfg.critic) critic = load_scorer(*cfg.critic);
    const auto records = run_episodes(lab_factory(spec), *policy, critic ? critic->scorer.get() : nullptr,
                                      cfg.rescore, cfg.seed, cfg.episodes, episode_options(cfg, embedder.get()),
                                      cfg.jobs);
    std::string summary;
    for (const auto& r : records) {
        write_file(fs::path(cfg.out) / "audit" / ("episode_" + std::to_string(r.seed) + ".jsonl"), audit_lines(r));
        summary += episode_summary_json(r) + "\n";
    }
    write_file(fs::path(cfg.out) / "episodes.jsonl", summary);
    check_failures(records);
    const Metrics m = compute_metrics(records);
    out << "ran " << m.n_episodes << " episodes: AS " << m.average_score << " SR " << m.success_rate << "\n";
    side.finish();
}

ojson evaluate(const RunConfig& cfg, std::ostream& out) {
    const auto spec = textlab::load_env_spec(cfg.env);
    const auto policy = make_policy(cfg, spec);
    const auto embedder = make_embedder(cfg);
    const auto opts = episode_options(cfg, embedder.get());
    const std::string hash = config_hash(cfg);
    ojson report;
    report["env"] = spec.name;
    report["config_hash"] = hash;
    report["entries"] = ojson::array();

    const auto base = run_episodes(lab_factory(spec), *policy, nullptr, cfg.rescore, cfg.seed, cfg.episodes, opts,
                                   cfg.jobs);
    check_failures(base);
    report["entries"].push_back(metrics_json("policy_only", compute_metrics(base), hash));
    if (cfg.critic) {
        const auto critic = load_scorer(*cfg.critic);
        const auto rescored = run_episodes(lab_factory(spec), *policy, critic->scorer.get(), cfg.rescore, cfg.seed,
                                           cfg.episodes, opts, cfg.jobs);
        check_failures(rescored);
        report["entries"].push_back(metrics_json("rescored", compute_metrics(rescored), hash));
    } else {
        out << "no critic given; reporting the policy-only agent\n";
    }
    for (const auto& e : report["entries"])
        out << std::left << std::setw(12) << e["label"].get<std::string>() << " AS " << std::fixed
            << std::setprecision(2) << e["AS"].get<double>() << "  SR " << e["SR"].get<double>() << "\n"
            << std::defaultfloat << std::setprecision(6);
    return report;
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
    Sidecar side(cfg, "eval");
    const ojson report = evaluate(cfg, out);
    write_file(fs::path(cfg.out) / "eval_report.json", report.dump(2) + "\n");
    side.finish();
}

void cmd_report(const RunConfig& cfg, std::ostream& out) {
    const fs::path dir(cfg.out);
    const fs::path log_path = dir / "train_log.jsonl";
    const fs::path eval_path = dir / "eval_report.json";
    if (!fs::exists(log_path) && !fs::exists(eval_path))
        throw IoError("nothing to report in " + dir.string() + " (no train_log.jsonl or eval_report.json)");
    std::ostringstream text;
    if (fs::exists(log_path)) {
        std::istringstream lines(read_file(log_path));
        std::string line;
        std::ostringstream curve;
        curve << "# epoch\tmean_loss_v\tmean_loss_q\n";
        text << "Training losses\n" << std::left << std::setw(8) << "epoch" << std::setw(16) << "loss_v"
             << "loss_q\n";
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            ojson j;
            try {
                j = ojson::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw IoError(log_path.string() + ": " + e.what());
            }
            const auto epoch = j.at("epoch").get<std::size_t>();
            const double lv = j.at("mean_loss_v").get<double>(), lq = j.at("mean_loss_q").get<double>();
            curve << epoch << "\t" << std::setprecision(17) << lv << "\t" << lq << "\n";
            text << std::setw(8) << epoch << std::setw(16) << std::setprecision(6) << lv << lq << "\n";
        }
        write_file(dir / "loss_curve.tsv", curve.str());
        text << "\n";
    }
    if (fs::exists(eval_path)) {
        ojson rep;
        try {
            rep = ojson::parse(read_file(eval_path));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(eval_path.string() + ": " + e.what());
        }
        std::ostringstream data;
        data << "# label\tn_episodes\tAS\tSR\tmean_steps\n";
        text << "Evaluation (" << rep.value("env", std::string("?")) << ")\n"
             << std::left << std::setw(14) << "agent" << std::setw(10) << "episodes" << std::setw(10) << "AS"
             << std::setw(10) << "SR" << "mean steps\n";
        for (const auto& e : rep.at("entries")) {
            const auto label = e.at("label").get<std::string>();
            data << label << "\t" << e.at("n_episodes").get<std::size_t>() << "\t" << e.at("AS").get<double>() << "\t"
                 << e.at("SR").get<double>() << "\t" << e.at("mean_steps").get<double>() << "\n";
            text << std::setw(14) << label << std::setw(10) << e.at("n_episodes").get<std::size_t>() << std::fixed
                 << std::setprecision(2) << std::setw(10) << e.at("AS").get<double>() << std::setw(10)
                 << e.at("SR").get<double>() << e.at("mean_steps").get<double>() << "\n"
                 << std::defaultfloat;
        }
        write_file(dir / "eval_table.tsv", data.str());
    }
    write_file(dir / "report.txt", text.str());
    out << text.str();
}

void cmd_pipeline(RunConfig cfg, std::ostream& out) {
    cmd_collect(cfg, out);
    if (!cfg.data) cfg.data = (fs::path(cfg.out) / "trajectories.jsonl").string();
    cmd_train(cfg, out);
    cfg.critic = (fs::path(cfg.out) / "critic.json").string();
    cmd_eval(cfg, out);
    cmd_report(cfg, out);
}

// Flag values; only the ones given on the command line override the config.
struct Flags {
    std::string config;
    std::optional<std::string> env, policy, critic, data, embedder, out, behavior, layout, reward_mode;
    std::optional<std::uint64_t> seed;
    std::optional<double> b, d, tau, gamma, static_alpha, rho, lr, epsilon, temperature, top_p, mock_error_rate;
    std::optional<std::size_t> k, jobs, epochs, batch_size, hidden_dim, embed_dim, vocab_size, collect_episodes,
        episodes, max_steps;
    bool twin_q = false;
};

void add_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON config file; flags override its values");
    app->add_option("--seed", f.seed, "Base random seed");
    app->add_option("--env", f.env, "Environment spec file or fixture name (lab3, lab5-sparse, lab7)");
    app->add_option("--policy", f.policy, "Policy backend: mock or a base URL");
    app->add_option("--critic", f.critic, "Critic checkpoint for rescoring");
    app->add_option("--b", f.b, "Lower bound of the policy weight");
    app->add_option("--d", f.d, "Per-step decay of the policy weight");
    app->add_option("--k", f.k, "Number of candidate actions");
    app->add_option("--tau", f.tau, "Expectile for the value loss");
    app->add_option("--gamma", f.gamma, "Discount factor");
    app->add_option("--static-alpha", f.static_alpha, "Use this constant policy weight at every step");
    app->add_option("--jobs", f.jobs, "Concurrent episodes for run/eval");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--data", f.data, "Trajectory file used by train");
    app->add_option("--embedder", f.embedder, "Base URL of a sentence-embedding service for grounding");
    app->add_option("--epochs", f.epochs, "Training epochs");
    app->add_option("--batch-size", f.batch_size, "Training batch size");
    app->add_option("--rho", f.rho, "Target network smoothing");
    app->add_option("--lr", f.lr, "Adam learning rate");
    app->add_flag("--twin-q", f.twin_q, "Train two Q heads and use their minimum");
    app->add_option("--hidden-dim", f.hidden_dim, "GRU hidden size");
    app->add_option("--embed-dim", f.embed_dim, "Token embedding size");
    app->add_option("--vocab-size", f.vocab_size, "Hashed vocabulary size");
    app->add_option("--layout", f.layout, "Critic input layout: three_field or five_field");
    app->add_option("--reward-mode", f.reward_mode, "delta or terminal");
    app->add_option("--behavior", f.behavior, "Data collection policy: optimal, epsilon_greedy, uniform_random");
    app->add_option("--epsilon", f.epsilon, "Exploration rate for epsilon_greedy collection");
    app->add_option("--collect-episodes", f.collect_episodes, "Trajectories to collect");
    app->add_option("--episodes", f.episodes, "Episodes for run/eval");
    app->add_option("--max-steps", f.max_steps, "Step limit per episode");
    app->add_option("--temperature", f.temperature, "Sampling temperature");
    app->add_option("--top-p", f.top_p, "Nucleus mass");
    app->add_option("--mock-error-rate", f.mock_error_rate, "Error rate of the mock policy");
}

template <class T, class U>
void overlay(const std::optional<T>& flag, U& dst) {
    if (flag) dst = *flag;
}

RunConfig resolve(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    overlay(f.env, c.env);
    overlay(f.policy, c.policy);
    if (f.critic) c.critic = *f.critic;
    if (f.data) c.data = *f.data;
    if (f.embedder) c.embedder = *f.embedder;
    overlay(f.out, c.out);
    overlay(f.seed, c.seed);
    overlay(f.jobs, c.jobs);
    overlay(f.b, c.rescore.b);
    overlay(f.d, c.rescore.d);
    overlay(f.k, c.rescore.k);
    if (f.static_alpha) c.rescore.static_alpha = *f.static_alpha;
    overlay(f.tau, c.iql.tau);
    overlay(f.gamma, c.iql.gamma);
    overlay(f.epochs, c.iql.epochs);
    overlay(f.batch_size, c.iql.batch_size);
    overlay(f.rho, c.iql.rho);
    overlay(f.lr, c.iql.adam.lr);
    if (f.twin_q) c.iql.twin_q = true;
    overlay(f.hidden_dim, c.iql.dims.hidden_dim);
    overlay(f.embed_dim, c.iql.dims.embed_dim);
    overlay(f.vocab_size, c.iql.dims.vocab_size);
    if (f.layout) c.iql.layout = parse_encoder_layout(*f.layout);
    if (f.reward_mode) c.iql.reward_mode = parse_reward_mode(*f.reward_mode);
    overlay(f.behavior, c.behavior);
    overlay(f.epsilon, c.epsilon);
    overlay(f.collect_episodes, c.collect_episodes);
    overlay(f.episodes, c.episodes);
    overlay(f.max_steps, c.max_steps);
    overlay(f.temperature, c.temperature);
    overlay(f.top_p, c.top_p);
    overlay(f.mock_error_rate, c.mock_error_rate);
    c.iql.seed = c.seed;
    c.validate();
    return c;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"IQL critic training and action rescoring for text agents", "agentcritic"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"collect", "Roll out a behavior policy and write trajectories.jsonl"},
        {"train", "Train the critic on a trajectory file; writes critic.json and train_log.jsonl"},
        {"run", "Run episodes and write per-step audits"},
        {"eval", "Compare the policy-only and rescored agents; writes eval_report.json"},
        {"report", "Render training and evaluation results as text tables and plot data"},
        {"pipeline", "collect, train, eval and report in one go"},
    };
    std::vector<CLI::App*> cmds;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        add_flags(sub, flags);
        cmds.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int rc = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return rc == 0 ? 0 : 2;
    }
    try {
        const RunConfig cfg = resolve(flags);
        fs::create_directories(cfg.out);
        write_file(fs::path(cfg.out) / "config.json", to_json(cfg));
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "collect") cmd_collect(cfg, out);
        else if (cmd == "train") cmd_train(cfg, out);
        else if (cmd == "run") cmd_run(cfg, out);
        else if (cmd == "eval") cmd_eval(cfg, out);
        else if (cmd == "report") cmd_report(cfg, out);
        else cmd_pipeline(cfg, out);
    } catch (const std::exception& e) {
        const int rc = exit_code_for(e);
        std::string kind = "error";
        if (auto* ae = dynamic_cast<const Error*>(&e)) kind = std::string(to_string(ae->kind())) + " error";
        err << "agentcritic: " << kind << ": " << e.what() << "\n";
        return rc;
    }
    return 0;
}

} // namespace agentcritic::cli
