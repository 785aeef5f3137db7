#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mempredict/workload.hpp"

namespace testutil {

inline mempredict::JobRecord job(std::string id, std::int64_t submit, std::optional<std::int64_t> finish = {},
                                 std::optional<double> mem = {}) {
    mempredict::JobRecord j;
    j.job_id = std::move(id);
    j.user = "alice";
    j.group = "staff";
    j.queue = "normal";
    j.cwd = "/home/alice";
    j.resreq = "rusage[mem=1000]";
    j.command = "./sim";
    j.priority = 50;
    j.submit_time = submit;
    j.req_time = 3600;
    j.req_procs = 4;
    j.finish_time = finish;
    j.max_mem_mib = mem;
    return j;
}

/// Finished jobs 0..n-1 where job i finishes at base + i.
inline std::vector<mempredict::JobRecord> finished_run(std::size_t n, std::int64_t base = 1000) {
    std::vector<mempredict::JobRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "j%06zu", i);
        const auto t = base + static_cast<std::int64_t>(i);
        out.push_back(job(id, t - 10, t, 100.0 + static_cast<double>(i % 7) * 512.0));
    }
    return out;
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("mempredict-" + tag + "-" + std::to_string(rd()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
