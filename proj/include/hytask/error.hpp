#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hytask {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char *kind() const noexcept { return "error"; }
};

/// Malformed or inconsistent mission file. `field_path` points at
/// the offending JSON member, e.g. `agents[0].tasks[1].p_success`.
class SpecError : public Error {
public:
    SpecError(std::string field_path, const std::string &message)
        : Error(field_path.empty() ? message : field_path + ": " + message),
          field_path_(std::move(field_path)) {}
    const std::string &field_path() const noexcept { return field_path_; }
    const char *kind() const noexcept override { return "spec_error"; }

private:
    std::string field_path_;
};

class NoPlanExists : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "no_plan_exists"; }
};

class PlannerTimeout : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "planner_timeout"; }
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "contract_violation"; }
};

class ModelError : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "model_error"; }
};

class InfiniteReward : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "infinite_reward"; }
};

class StateBudgetExceeded : public Error {
public:
    StateBudgetExceeded(std::size_t reached, std::size_t budget)
        : Error("state budget exceeded: " + std::to_string(reached) + " states explored, budget " +
                std::to_string(budget)),
          reached_(reached) {}
    std::size_t reached() const noexcept { return reached_; }
    const char *kind() const noexcept override { return "state_budget_exceeded"; }

private:
    std::size_t reached_;
};

class LimitExceeded : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "limit_exceeded"; }
};

/// Adaptation could not produce any verified plan for the remaining mission.
class MissionUnrecoverable : public Error {
public:
    using Error::Error;
    const char *kind() const noexcept override { return "mission_unrecoverable"; }
};

} // namespace hytask
