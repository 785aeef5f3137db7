#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mempredict {

/// One job as recorded by the batch scheduler: the submission-time features
/// plus, once the job has finished, its completion time and peak memory.
struct JobRecord {
    std::string job_id;
    std::string user;
    std::string group;
    std::string queue;
    std::string cwd;
    std::string resreq;
    std::string command;
    std::int64_t priority = 0;
    std::int64_t submit_time = 0;  ///< epoch seconds, UTC
    std::int64_t req_time = 0;     ///< requested runtime, seconds
    std::int64_t req_procs = 1;
    std::optional<std::int64_t> finish_time;
    std::optional<double> max_mem_mib;

    bool finished() const { return finish_time.has_value(); }

    friend bool operator==(const JobRecord&, const JobRecord&) = default;
};

/// Throws InvariantViolation naming the first offending field.
void validate(const JobRecord& job);

/// Reads a line-oriented trace (one flat JSON object per line, `#` comments).
std::vector<JobRecord> parse_trace(std::istream& in);

std::string serialize_job(const JobRecord& job);
void write_trace(std::ostream& out, std::span<const JobRecord> jobs);

enum class EventKind { Finished, Submitted };  // declaration order is the tie order

struct JobEvent {
    EventKind kind;
    std::int64_t time;
    std::string job_id;

    friend bool operator==(const JobEvent&, const JobEvent&) = default;
};

/// Submissions and completions, ordered by (time, Finished first, job_id).
std::vector<JobEvent> event_stream(std::span<const JobRecord> jobs);

struct CalendarFeatures {
    int weekday;                 ///< Monday = 0
    int seconds_since_midnight;  ///< UTC
};

CalendarFeatures derive_calendar_features(std::int64_t submit_time);

struct SyntheticConfig {
    std::size_t n_jobs = 35000;
    std::size_t n_users = 20;
    std::size_t n_commands = 10;
    std::size_t base_bin_spread = 12;
    double noise_sigma_mib = 64.0;
    double mean_interarrival_s = 60.0;
    double mean_runtime_s = 3600.0;
    std::optional<std::size_t> drift_at;
    std::uint64_t seed = 0;
    int bin_size_mib = 512;
    std::int64_t start_time = 1'500'000'000;
};

/// The ground truth a synthetic workload was drawn from: every
/// (user, command) pair has a base memory at the centre of one bin.
class PlantedTable {
public:
    PlantedTable() = default;
    PlantedTable(std::vector<std::string> users, std::vector<std::string> commands,
                 std::vector<int> base_bins, int bin_size_mib);

    int base_bin(std::string_view user, std::string_view command) const;
    double base_mib(std::string_view user, std::string_view command) const;
    std::span<const int> bins() const { return base_bins_; }
    int bin_size_mib() const { return bin_size_mib_; }

private:
    std::map<std::pair<std::string, std::string>, int, std::less<>> index_;
    std::vector<int> base_bins_;
    int bin_size_mib_ = 512;
};

struct SyntheticWorkload {
    std::vector<JobRecord> jobs;
    PlantedTable planted;
    std::optional<PlantedTable> drifted;  ///< in force from drift_at onwards
    std::optional<std::size_t> drift_at;

    /// Planted bin for the job at `index` in `jobs`.
    int planted_bin(std::size_t index) const;
};

SyntheticWorkload generate_synthetic(const SyntheticConfig& config);

}  // namespace mempredict
