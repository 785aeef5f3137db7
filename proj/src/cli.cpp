#include "mempredict/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "mempredict/errors.hpp"
#include "mempredict/evaluation.hpp"
#include "mempredict/pipeline.hpp"
#include "mempredict/serialization.hpp"
#include "mempredict/store.hpp"
#include "mempredict/workload.hpp"

namespace fs = std::filesystem;

namespace mempredict {

namespace {

constexpr const char* kUsage =
    "usage: lspredict <verb> [options]\n"
    "\n"
    "verbs:\n"
    "  predict    predict the memory request of a job described by bsub-like flags\n"
    "  generate   write a synthetic trace\n"
    "  ingest     add finished jobs from a trace to a job store\n"
    "  train      train and publish a model set from a job store\n"
    "  evaluate   replay a trace segment by segment and write accuracy reports\n"
    "\n"
    "Run 'lspredict <verb> --help' for the options of one verb.\n";

constexpr const char* kPredictUsage =
    "usage: lspredict predict [options] -- command [args...]\n"
    "\n"
    "  -q QUEUE          queue\n"
    "  -n PROCS          requested processors (default 1)\n"
    "  -W MINUTES        requested wall time in minutes\n"
    "  -P PRIORITY       priority\n"
    "  -cwd DIR          working directory\n"
    "  -R RESREQ         resource requirement string\n"
    "  -u USER           submitting user\n"
    "  -g GROUP          user group\n"
    "  --submit-time T   submission time in epoch seconds (default: now)\n"
    "  --models DIR      model store (default: $LSPREDICT_MODELS)\n"
    "  --history DIR     job store used for the mode fallback when no model exists\n"
    "  --allow-cold      answer from the fallback tiers when the store holds no model\n"
    "  --explain         print how each top-ranked model voted\n"
    "  -h, --help        show this text\n";

fs::path jobs_file(const fs::path& store) { return store / "jobs.jsonl"; }

std::vector<JobRecord> read_trace_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    return parse_trace(in);
}

std::vector<JobRecord> read_store_jobs(const fs::path& store) {
    if (!fs::exists(jobs_file(store))) return {};
    auto jobs = read_trace_file(jobs_file(store));
    std::erase_if(jobs, [](const JobRecord& j) { return !j.finished(); });
    std::sort(jobs.begin(), jobs.end(), [](const JobRecord& a, const JobRecord& b) {
        return std::tie(*a.finish_time, a.job_id) < std::tie(*b.finish_time, b.job_id);
    });
    return jobs;
}

void write_atomically(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << bytes;
        if (!out) throw IoError("cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

PipelineConfig read_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

/// CLI11 wants argc/argv with a program name in front.
void parse_with(CLI::App& app, const std::string& verb, const std::vector<std::string>& args) {
    std::vector<const char*> argv = {verb.c_str()};
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
}

template <typename Body>
int run_verb(CLI::App& app, const std::string& verb, const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err, Body body) {
    try {
        parse_with(app, verb, args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n" << app.help();
        return kExitUsage;
    }
    return body();
}

int cmd_generate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Write a synthetic trace with a planted memory table.", "lspredict generate"};
    SyntheticConfig cfg;
    std::string path;
    std::size_t drift_at = 0;
    app.add_option("--jobs", cfg.n_jobs, "number of jobs")->required();
    app.add_option("--seed", cfg.seed, "random seed")->required();
    app.add_option("--out", path, "output trace file")->required();
    app.add_option("--users", cfg.n_users, "distinct users")->capture_default_str();
    app.add_option("--commands", cfg.n_commands, "distinct commands")->capture_default_str();
    app.add_option("--spread", cfg.base_bin_spread, "distinct planted bins")->capture_default_str();
    app.add_option("--noise", cfg.noise_sigma_mib, "memory noise sigma in MiB")->capture_default_str();
    app.add_option("--interarrival", cfg.mean_interarrival_s, "mean seconds between submissions")
        ->capture_default_str();
    app.add_option("--runtime", cfg.mean_runtime_s, "mean runtime in seconds")->capture_default_str();
    app.add_option("--drift-at", drift_at, "job index where the planted table changes");
    app.add_option("--bin-size", cfg.bin_size_mib, "bin width in MiB")->capture_default_str();
    return run_verb(app, "generate", args, out, err, [&] {
        if (app.count("--drift-at")) cfg.drift_at = drift_at;
        const SyntheticWorkload w = generate_synthetic(cfg);
        std::ostringstream ss;
        write_trace(ss, w.jobs);
        write_atomically(fs::absolute(path), ss.str());
        out << "wrote " << w.jobs.size() << " jobs to " << path << "\n";
        return kExitOk;
    });
}

int cmd_ingest(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Add the finished jobs of a trace to a job store.", "lspredict ingest"};
    std::string trace_path, store;
    app.add_option("--trace", trace_path, "trace file (one JSON job per line)")->required();
    app.add_option("--store", store, "job store directory")->required();
    return run_verb(app, "ingest", args, out, err, [&] {
        const auto incoming = read_trace_file(trace_path);
        fs::create_directories(store);
        auto jobs = read_store_jobs(store);
        std::map<std::string, std::size_t> known;
        for (std::size_t i = 0; i < jobs.size(); ++i) known[jobs[i].job_id] = i;
        std::size_t added = 0, skipped_unfinished = 0;
        for (const auto& j : incoming) {
            if (!j.finished()) {
                ++skipped_unfinished;
                continue;
            }
            auto it = known.find(j.job_id);
            if (it != known.end()) {
                if (jobs[it->second] != j) throw DuplicateJobId(j.job_id);
                continue;
            }
            known[j.job_id] = jobs.size();
            jobs.push_back(j);
            ++added;
        }
        std::sort(jobs.begin(), jobs.end(), [](const JobRecord& a, const JobRecord& b) {
            return std::tie(*a.finish_time, a.job_id) < std::tie(*b.finish_time, b.job_id);
        });
        std::ostringstream ss;
        write_trace(ss, jobs);
        write_atomically(jobs_file(store), ss.str());
        out << "ingested " << added << " new finished jobs (" << jobs.size() << " in store";
        if (skipped_unfinished) out << ", " << skipped_unfinished << " unfinished skipped";
        out << ")\n";
        return kExitOk;
    });
}

int cmd_train(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Train all methods on the newest window of a job store and publish them.", "lspredict train"};
    std::string store, models, config_path;
    std::int64_t as_of = 0;
    app.add_option("--store", store, "job store directory")->required();
    app.add_option("--models", models, "model store directory")->required();
    app.add_option("--config", config_path, "pipeline config file");
    app.add_option("--as-of", as_of, "train on jobs finished before this time (default: after the newest)");
    return run_verb(app, "train", args, out, err, [&] {
        const PipelineConfig config = read_config(config_path);
        const auto jobs = read_store_jobs(store);
        if (!app.count("--as-of")) {
            as_of = 0;
            for (const auto& j : jobs) as_of = std::max(as_of, *j.finish_time + 1);
        }
        const auto window = assemble_window(jobs, config.window_size, as_of);
        if (window.size() < config.window_size) {
            err << "lspredict train: " << ShortWindow(window.size(), config.window_size).what() << "\n";
            return kExitTooShort;
        }
        const WindowSplit split = split_window(window, config);
        std::size_t consumed = 0;
        for (const auto& j : jobs) consumed += *j.finish_time < as_of;
        const ModelSet set = train_model_set(split.train, split.validation, config, as_of, consumed);
        const fs::path snapshot = persist_model_set(set, models);
        out << "published " << snapshot.filename().string() << " (mode bin " << set.mode_bin << ")\n";
        for (std::size_t r = 0; r < set.ranked.size(); ++r) {
            char line[96];
            std::snprintf(line, sizeof line, "  %zu. %-8s validation accuracy %.4f\n", r + 1,
                          std::string(method_name(set.ranked.entries[r].method)).c_str(),
                          set.ranked.entries[r].validation_accuracy);
            out << line;
        }
        return kExitOk;
    });
}

int cmd_evaluate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Replay a trace in segments and write accuracy tables.", "lspredict evaluate"};
    std::string trace_path, out_dir, config_path, profile;
    EvalConfig eval;
    std::size_t top_n = 0;
    std::uint64_t seed = 0;
    bool quiet = false;
    app.add_option("--trace", trace_path, "trace file")->required();
    app.add_option("--out", out_dir, "report directory")->required();
    app.add_option("--segments", eval.segments, "number of test segments")->capture_default_str();
    app.add_option("--segment-size", eval.segment_size, "jobs per segment")->capture_default_str();
    app.add_option("--warmup", eval.warmup, "jobs before the first segment")->capture_default_str();
    app.add_option("--top-n", top_n, "models polled per prediction (default from config)");
    app.add_option("--profile", profile, "grid profile")->check(CLI::IsMember({"fast", "full"}));
    app.add_option("--seed", seed, "training seed (default from config)");
    app.add_option("--config", config_path, "pipeline config file");
    app.add_flag("--strict-per-job", eval.strict_per_job, "retrain whenever a job's own history differs");
    app.add_flag("--quiet", quiet, "no progress lines on stderr");
    return run_verb(app, "evaluate", args, out, err, [&] {
        eval.pipeline = read_config(config_path);
        if (app.count("--top-n")) eval.pipeline.top_n = top_n;
        if (app.count("--seed")) eval.pipeline.seed = seed;
        if (!profile.empty()) eval.pipeline.grid_profile = *parse_profile(profile);
        eval.pipeline.validate();
        if (!quiet) eval.log = [&](std::string_view line) { err << line << "\n" << std::flush; };
        const auto trace = read_trace_file(trace_path);
        const EvaluationReport report = run_segmented_evaluation(trace, eval);
        emit_report(report, out_dir);
        for (const auto& s : report.segments) {
            char line[128];
            std::snprintf(line, sizeof line, "segment %zu: mode %.4f poll %.4f perfect %.4f\n", s.index,
                          s.mode_test_accuracy, s.poll_validation_accuracy, s.poll_perfect_accuracy);
            out << line;
        }
        return kExitOk;
    });
}

struct PredictArgs {
    JobRecord job;
    std::optional<std::string> models;
    std::optional<std::string> history;
    bool allow_cold = false;
    bool explain = false;
    bool help = false;
};

std::int64_t parse_integer(const std::string& flag, const std::string& value) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw CLI::ConversionError(flag, value);
    return v;
}

PredictArgs parse_predict(const std::vector<std::string>& args) {
    PredictArgs p;
    p.job.job_id = "query";
    p.job.submit_time = static_cast<std::int64_t>(std::time(nullptr));
    bool separator = false;
    std::size_t i = 0;
    auto value = [&](const std::string& flag) -> const std::string& {
        if (i + 1 >= args.size()) throw CLI::ArgumentMismatch(flag + " needs a value");
        return args[++i];
    };
    for (; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--") {
            separator = true;
            ++i;
            break;
        }
        if (a == "-h" || a == "--help") p.help = true;
        else if (a == "-q") p.job.queue = value(a);
        else if (a == "-n") p.job.req_procs = parse_integer(a, value(a));
        else if (a == "-W") p.job.req_time = parse_integer(a, value(a)) * 60;
        else if (a == "-P") p.job.priority = parse_integer(a, value(a));
        else if (a == "-cwd") p.job.cwd = value(a);
        else if (a == "-R") p.job.resreq = value(a);
        else if (a == "-u") p.job.user = value(a);
        else if (a == "-g") p.job.group = value(a);
        else if (a == "--submit-time") p.job.submit_time = parse_integer(a, value(a));
        else if (a == "--models") p.models = value(a);
        else if (a == "--history") p.history = value(a);
        else if (a == "--allow-cold") p.allow_cold = true;
        else if (a == "--explain") p.explain = true;
        else throw CLI::ExtrasError({a});
    }
    if (p.help) return p;
    if (!separator) throw CLI::ArgumentMismatch("missing '--' before the job command");
    std::string command;
    for (; i < args.size(); ++i) command += (command.empty() ? "" : " ") + args[i];
    if (command.empty()) throw CLI::ArgumentMismatch("missing job command after '--'");
    p.job.command = command;
    if (p.job.req_procs < 1) throw CLI::ValidationError("-n", "requested processors must be at least 1");
    if (p.job.req_time < 0) throw CLI::ValidationError("-W", "wall time must not be negative");
    if (p.job.submit_time < 0) throw CLI::ValidationError("--submit-time", "must not be negative");
    return p;
}

void print_prediction(const Prediction& p, bool explain, std::ostream& out) {
    char line[128];
    std::snprintf(line, sizeof line, "predicted_bin=%d predicted_mem_mib=%.0f tier=%s\n", p.bin, p.request_mib,
                  std::string(tier_name(p.tier)).c_str());
    out << line;
    if (!explain) return;
    for (const auto& v : p.voters) {
        std::snprintf(line, sizeof line, "  voter rank=%zu method=%s weight=%.4f bin=%d\n", v.rank,
                      std::string(method_name(v.method)).c_str(), v.weight, v.bin);
        out << line;
    }
}

int cmd_predict(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    PredictArgs p;
    try {
        p = parse_predict(args);
    } catch (const CLI::Error& e) {
        err << "lspredict predict: " << e.what() << "\n" << kPredictUsage;
        return kExitUsage;
    }
    if (p.help) {
        out << kPredictUsage;
        return kExitOk;
    }
    if (!p.models) {
        if (const char* env = std::getenv(kModelsEnvVar); env && *env) p.models = env;
    }
    if (!p.models && !p.allow_cold) {
        err << "lspredict predict: no model store; pass --models or set " << kModelsEnvVar << "\n";
        return kExitUsage;
    }

    std::optional<ModelSet> set;
    if (p.models) {
        try {
            set = load_model_set(*p.models);
        } catch (const NotFound& e) {
            if (!p.allow_cold) {
                err << "lspredict predict: " << e.what() << "\n";
                return kExitStoreUnreadable;
            }
        } catch (const Error& e) {
            err << "lspredict predict: " << e.what() << "\n";
            return kExitStoreUnreadable;
        }
    }
    if (set) {
        print_prediction(predict_with_models(*set, p.job), p.explain, out);
        return kExitOk;
    }

    // Cold start: the mode of known history, else the default bin.
    Pipeline cold{PipelineConfig{}};
    if (p.history)
        for (auto& j : read_store_jobs(*p.history)) cold.observe_finished(std::move(j));
    print_prediction(cold.predict_job(p.job), p.explain, out);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        err << kUsage;
        return kExitUsage;
    }
    const std::string& verb = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    try {
        if (verb == "predict") return cmd_predict(rest, out, err);
        if (verb == "generate") return cmd_generate(rest, out, err);
        if (verb == "ingest") return cmd_ingest(rest, out, err);
        if (verb == "train") return cmd_train(rest, out, err);
        if (verb == "evaluate") return cmd_evaluate(rest, out, err);
        if (verb == "-h" || verb == "--help" || verb == "help") {
            out << kUsage;
            return kExitOk;
        }
        err << "lspredict: unknown verb '" << verb << "'\n" << kUsage;
        return kExitUsage;
    } catch (const TraceTooShort& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n";
        return kExitTooShort;
    } catch (const ShortWindow& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n";
        return kExitTooShort;
    } catch (const InvalidConfig& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "lspredict " << verb << ": " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace mempredict
