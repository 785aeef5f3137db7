#include "mempredict/workload.hpp"

#include <algorithm>
#include <array>
#include <tuple>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::array<std::string_view, 7> kStringFields = {"job_id", "user",   "group",  "queue",
                                                           "cwd",    "resreq", "command"};
constexpr std::array<std::string_view, 4> kIntFields = {"priority", "submit_time", "req_time",
                                                        "req_procs"};

bool known_field(std::string_view key) {
    if (std::find(kStringFields.begin(), kStringFields.end(), key) != kStringFields.end()) return true;
    if (std::find(kIntFields.begin(), kIntFields.end(), key) != kIntFields.end()) return true;
    return key == "finish_time" || key == "max_mem_mib";
}

std::string& string_field(JobRecord& job, std::string_view key) {
    if (key == "job_id") return job.job_id;
    if (key == "user") return job.user;
    if (key == "group") return job.group;
    if (key == "queue") return job.queue;
    if (key == "cwd") return job.cwd;
    if (key == "resreq") return job.resreq;
    return job.command;
}

std::int64_t& int_field(JobRecord& job, std::string_view key) {
    if (key == "priority") return job.priority;
    if (key == "submit_time") return job.submit_time;
    if (key == "req_time") return job.req_time;
    return job.req_procs;
}

JobRecord job_from_line(const std::string& line, std::size_t line_no) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedLine(line_no, e.what());
    }
    if (!obj.is_object()) throw MalformedLine(line_no, "not an object");
    for (const auto& item : obj.items()) {
        if (!known_field(item.key())) throw MalformedLine(line_no, "unknown field '" + item.key() + "'");
    }

    JobRecord job;
    for (std::string_view key : kStringFields) {
        auto it = obj.find(std::string(key));
        if (it == obj.end() || !it->is_string())
            throw MalformedLine(line_no, "field '" + std::string(key) + "' missing or not a string");
        string_field(job, key) = it->get<std::string>();
    }
    for (std::string_view key : kIntFields) {
        auto it = obj.find(std::string(key));
        if (it == obj.end() || !it->is_number_integer())
            throw MalformedLine(line_no, "field '" + std::string(key) + "' missing or not an integer");
        int_field(job, key) = it->get<std::int64_t>();
    }
    if (auto it = obj.find("finish_time"); it != obj.end()) {
        if (!it->is_number_integer()) throw MalformedLine(line_no, "finish_time not an integer");
        job.finish_time = it->get<std::int64_t>();
    }
    if (auto it = obj.find("max_mem_mib"); it != obj.end()) {
        if (!it->is_number()) throw MalformedLine(line_no, "max_mem_mib not a number");
        job.max_mem_mib = it->get<double>();
    }
    return job;
}

}  // namespace

void validate(const JobRecord& job) {
    if (job.job_id.empty()) throw InvariantViolation(job.job_id, "job_id");
    if (job.submit_time < 0) throw InvariantViolation(job.job_id, "submit_time");
    if (job.req_time < 0) throw InvariantViolation(job.job_id, "req_time");
    if (job.req_procs < 1) throw InvariantViolation(job.job_id, "req_procs");
    if (job.finish_time && !job.max_mem_mib) throw InvariantViolation(job.job_id, "max_mem_mib");
    if (!job.finish_time && job.max_mem_mib) throw InvariantViolation(job.job_id, "finish_time");
    if (job.finish_time && *job.finish_time <= job.submit_time)
        throw InvariantViolation(job.job_id, "finish_time");
    if (job.max_mem_mib && !(*job.max_mem_mib >= 0.0 && std::isfinite(*job.max_mem_mib)))
        throw InvariantViolation(job.job_id, "max_mem_mib");
}

std::vector<JobRecord> parse_trace(std::istream& in) {
    std::vector<JobRecord> jobs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        JobRecord job = job_from_line(line, line_no);
        validate(job);
        if (!seen.insert(job.job_id).second) throw DuplicateJobId(job.job_id);
        jobs.push_back(std::move(job));
    }
    return jobs;
}

std::string serialize_job(const JobRecord& job) {
    ordered_json obj;
    obj["job_id"] = job.job_id;
    obj["user"] = job.user;
    obj["group"] = job.group;
    obj["queue"] = job.queue;
    obj["cwd"] = job.cwd;
    obj["resreq"] = job.resreq;
    obj["command"] = job.command;
    obj["priority"] = job.priority;
    obj["submit_time"] = job.submit_time;
    obj["req_time"] = job.req_time;
    obj["req_procs"] = job.req_procs;
    if (job.finish_time) obj["finish_time"] = *job.finish_time;
    if (job.max_mem_mib) obj["max_mem_mib"] = *job.max_mem_mib;
    return obj.dump();
}

void write_trace(std::ostream& out, std::span<const JobRecord> jobs) {
    for (const auto& job : jobs) out << serialize_job(job) << '\n';
}

std::vector<JobEvent> event_stream(std::span<const JobRecord> jobs) {
    std::vector<JobEvent> events;
    events.reserve(jobs.size() * 2);
    for (const auto& job : jobs) {
        events.push_back({EventKind::Submitted, job.submit_time, job.job_id});
        if (job.finish_time) events.push_back({EventKind::Finished, *job.finish_time, job.job_id});
    }
    std::sort(events.begin(), events.end(), [](const JobEvent& a, const JobEvent& b) {
        return std::tie(a.time, a.kind, a.job_id) < std::tie(b.time, b.kind, b.job_id);
    });
    return events;
}

CalendarFeatures derive_calendar_features(std::int64_t submit_time) {
    constexpr std::int64_t kDay = 86400;
    const std::int64_t days = submit_time / kDay;
    // 1970-01-01 was a Thursday (3 with Monday = 0).
    return {static_cast<int>((days + 3) % 7), static_cast<int>(submit_time % kDay)};
}

PlantedTable::PlantedTable(std::vector<std::string> users, std::vector<std::string> commands,
                           std::vector<int> base_bins, int bin_size_mib)
    : base_bins_(std::move(base_bins)), bin_size_mib_(bin_size_mib) {
    for (std::size_t u = 0; u < users.size(); ++u)
        for (std::size_t c = 0; c < commands.size(); ++c)
            index_.emplace(std::pair{users[u], commands[c]},
                           base_bins_.at(u * commands.size() + c));
}

int PlantedTable::base_bin(std::string_view user, std::string_view command) const {
    auto it = index_.find(std::pair{std::string(user), std::string(command)});
    if (it == index_.end()) throw NotFound("planted entry for " + std::string(user) + "/" + std::string(command));
    return it->second;
}

double PlantedTable::base_mib(std::string_view user, std::string_view command) const {
    return (base_bin(user, command) + 0.5) * bin_size_mib_;
}

int SyntheticWorkload::planted_bin(std::size_t index) const {
    const JobRecord& job = jobs.at(index);
    const PlantedTable& table = (drifted && drift_at && index >= *drift_at) ? *drifted : planted;
    return table.base_bin(job.user, job.command);
}

namespace {

std::string padded(std::string_view prefix, std::size_t value, std::size_t count) {
    const std::size_t digits = std::to_string(count > 0 ? count - 1 : 0).size();
    std::string num = std::to_string(value);
    return std::string(prefix) + std::string(digits > num.size() ? digits - num.size() : 0, '0') + num;
}

std::vector<int> plant_bins(std::size_t n_pairs, std::size_t spread, std::uint64_t seed) {
    Rng rng(seed);
    // Choose `spread` distinct bins from [0, 2*spread), then deal pairs out
    // round-robin over a shuffled pair order so every chosen bin is used.
    std::vector<int> candidates(2 * spread);
    std::iota(candidates.begin(), candidates.end(), 0);
    rng.shuffle(std::span<int>(candidates));
    candidates.resize(spread);
    std::sort(candidates.begin(), candidates.end());

    std::vector<std::size_t> order(n_pairs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    std::vector<int> bins(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) bins[order[i]] = candidates[i % spread];
    return bins;
}

}  // namespace

SyntheticWorkload generate_synthetic(const SyntheticConfig& config) {
    if (config.n_jobs == 0) throw InvalidConfig("n_jobs must be positive");
    if (config.n_users == 0) throw InvalidConfig("n_users must be positive");
    if (config.n_commands == 0) throw InvalidConfig("n_commands must be positive");
    if (config.base_bin_spread == 0) throw InvalidConfig("base_bin_spread must be positive");
    if (config.bin_size_mib < 1) throw InvalidConfig("bin_size_mib must be positive");
    if (!(config.noise_sigma_mib >= 0.0)) throw InvalidConfig("noise_sigma_mib must be non-negative");
    if (!(config.mean_interarrival_s > 0.0) || !(config.mean_runtime_s > 0.0))
        throw InvalidConfig("mean interarrival and runtime must be positive");

    const std::uint64_t seed = config.seed;
    std::vector<std::string> users, commands;
    for (std::size_t u = 0; u < config.n_users; ++u) users.push_back(padded("user", u, config.n_users));
    for (std::size_t c = 0; c < config.n_commands; ++c)
        commands.push_back(padded("app", c, config.n_commands));

    const std::size_t n_pairs = config.n_users * config.n_commands;
    SyntheticWorkload out;
    out.planted = PlantedTable(users, commands, plant_bins(n_pairs, config.base_bin_spread, derive_seed(seed, 1)),
                               config.bin_size_mib);
    if (config.drift_at) {
        out.drift_at = config.drift_at;
        out.drifted = PlantedTable(users, commands,
                                   plant_bins(n_pairs, config.base_bin_spread, derive_seed(seed, 2)),
                                   config.bin_size_mib);
    }

    static constexpr std::array<std::string_view, 4> kQueues = {"normal", "long", "short", "priority"};
    static constexpr std::array<std::string_view, 3> kResreq = {
        "select[type==X86_64]", "select[type==X86_64] span[hosts=1]", "select[mem>4096] rusage[mem=4096]"};
    static constexpr std::array<std::int64_t, 7> kReqTimes = {600, 1800, 3600, 7200, 14400, 43200, 86400};
    static constexpr std::array<std::int64_t, 6> kProcs = {1, 2, 4, 8, 16, 32};
    const std::size_t n_groups = std::max<std::size_t>(1, (config.n_users + 4) / 5);

    Rng rng(derive_seed(seed, 3));
    double clock = 0.0;
    out.jobs.reserve(config.n_jobs);
    for (std::size_t i = 0; i < config.n_jobs; ++i) {
        const std::size_t u = rng.below(config.n_users);
        const std::size_t c = rng.below(config.n_commands);
        const double noise = rng.normal() * config.noise_sigma_mib;
        clock += rng.exponential(config.mean_interarrival_s);
        const double runtime = rng.exponential(config.mean_runtime_s);

        const std::uint64_t pair_key = derive_seed(seed, 1000 + u * config.n_commands + c);
        const std::uint64_t user_key = derive_seed(seed, 100000 + u);
        const std::uint64_t cmd_key = derive_seed(seed, 200000 + c);

        JobRecord job;
        job.job_id = padded("job", i, config.n_jobs);
        job.user = users[u];
        job.group = padded("grp", u % n_groups, n_groups);
        job.queue = std::string(kQueues[pair_key % kQueues.size()]);
        job.cwd = "/home/" + users[u] + "/work/" + commands[c];
        job.resreq = std::string(kResreq[(pair_key >> 8) % kResreq.size()]);
        job.command = commands[c];
        job.priority = 10 + static_cast<std::int64_t>(user_key % 90);
        job.submit_time = config.start_time + static_cast<std::int64_t>(std::floor(clock));
        job.req_time = kReqTimes[cmd_key % kReqTimes.size()];
        job.req_procs = kProcs[(pair_key >> 16) % kProcs.size()];
        job.finish_time = job.submit_time + std::max<std::int64_t>(1, std::llround(runtime));

        const PlantedTable& table =
            (out.drifted && i >= *config.drift_at) ? *out.drifted : out.planted;
        const double mem = std::max(1.0, table.base_mib(job.user, job.command) + noise);
        job.max_mem_mib = std::round(mem * 1000.0) / 1000.0;
        out.jobs.push_back(std::move(job));
    }
    return out;
}

}  // namespace mempredict
