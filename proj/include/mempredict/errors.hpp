#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mempredict {

/// Base of every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line_no, const std::string& detail)
        : Error("malformed trace line " + std::to_string(line_no) + ": " + detail), line_no_(line_no) {}
    std::size_t line_no() const { return line_no_; }

private:
    std::size_t line_no_;
};

class InvariantViolation : public Error {
public:
    InvariantViolation(std::string job_id, std::string field)
        : Error("job '" + job_id + "' violates invariant on field '" + field + "'"),
          job_id_(std::move(job_id)), field_(std::move(field)) {}
    const std::string& job_id() const { return job_id_; }
    const std::string& field() const { return field_; }

private:
    std::string job_id_;
    std::string field_;
};

class DuplicateJobId : public Error {
public:
    explicit DuplicateJobId(std::string job_id)
        : Error("duplicate job id '" + job_id + "'"), job_id_(std::move(job_id)) {}
    const std::string& job_id() const { return job_id_; }

private:
    std::string job_id_;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class EmptyTrainingSet : public Error {
public:
    EmptyTrainingSet() : Error("training set is empty") {}
};

class MissingLabel : public Error {
public:
    explicit MissingLabel(std::string job_id)
        : Error("job '" + job_id + "' has no memory label"), job_id_(std::move(job_id)) {}
    const std::string& job_id() const { return job_id_; }

private:
    std::string job_id_;
};

class WidthMismatch : public Error {
public:
    WidthMismatch(std::size_t expected, std::size_t got)
        : Error("feature width mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

class NotAPartition : public Error {
public:
    NotAPartition() : Error("partitions do not form a partition of the parent labels") {}
};

class LengthMismatch : public Error {
public:
    LengthMismatch(std::size_t a, std::size_t b)
        : Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyInput : public Error {
public:
    EmptyInput() : Error("empty input") {}
};

class ShortWindow : public Error {
public:
    ShortWindow(std::size_t size, std::size_t needed)
        : Error("window holds " + std::to_string(size) + " jobs, " + std::to_string(needed) +
                " required"),
          size_(size) {}
    std::size_t size() const { return size_; }

private:
    std::size_t size_;
};

class StoreCorrupt : public Error {
public:
    explicit StoreCorrupt(const std::string& detail) : Error("model store corrupt: " + detail) {}
};

class VersionMismatch : public Error {
public:
    VersionMismatch(int found, int expected)
        : Error("model store schema version " + std::to_string(found) + ", expected " +
                std::to_string(expected)),
          found_(found), expected_(expected) {}
    int found() const { return found_; }
    int expected() const { return expected_; }

private:
    int found_;
    int expected_;
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& what) : Error("not found: " + what) {}
};

class TraceTooShort : public Error {
public:
    TraceTooShort(std::size_t needed, std::size_t got)
        : Error("trace too short: need " + std::to_string(needed) + " jobs, got " +
                std::to_string(got)),
          needed_(needed), got_(got) {}
    std::size_t needed() const { return needed_; }
    std::size_t got() const { return got_; }

private:
    std::size_t needed_;
    std::size_t got_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mempredict
