#pragma once

#include "agentsched/workload.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace agentsched {

inline constexpr int kDefaultMawsPoolCores = 36;

struct Sequential {
    bool operator==(const Sequential&) const = default;
};
struct MultiThreading {
    /// Concurrent CPU-tool stages allowed in the pool; 0 means one worker per task.
    int pool_size = 0;
    bool operator==(const MultiThreading&) const = default;
};
struct MultiProcessing {
    bool operator==(const MultiProcessing&) const = default;
};
struct Cgam {
    int b_cap = 64;
    bool operator==(const Cgam&) const = default;
};
struct CgamOverlap {
    int b_cap = 64;
    bool operator==(const CgamOverlap&) const = default;
};
struct Maws {
    double theta = kDefaultTheta;
    int thread_pool_cores = kDefaultMawsPoolCores;
    bool operator==(const Maws&) const = default;
};
struct MawsCgam {
    double theta = kDefaultTheta;
    int thread_pool_cores = kDefaultMawsPoolCores;
    int b_cap = 64;
    bool operator==(const MawsCgam&) const = default;
};

struct Policy {
    std::variant<Sequential, MultiThreading, MultiProcessing, Cgam, CgamOverlap, Maws, MawsCgam> variant;

    Policy() : variant(MultiProcessing{}) {}
    template <typename V>
    Policy(V v) : variant(std::move(v)) {}

    std::string_view name() const;
    /// Canonical "name key=value ..." form; stable across runs, used for fingerprints.
    std::string describe() const;
    /// Theta used for task classification (the MAWS threshold, or the default).
    double theta() const;
    void validate() const;
    bool operator==(const Policy&) const = default;
};

std::span<const std::string_view> policy_names();

struct MicroBatchPlan {
    std::vector<std::vector<int>> batches;
};

MicroBatchPlan plan_microbatches(std::span<const int> task_ids, int b_cap);

struct MawsPartition {
    std::vector<int> process_set;
    std::vector<int> thread_set;
};

MawsPartition maws_partition(std::span<const TaskInstance> tasks, double theta);

enum class Placement { Process, Pool };
std::string_view to_string(Placement p);
Placement parse_placement(std::string_view s);

struct StartAction {
    int task = 0;
    std::size_t stage = 0;
    bool operator==(const StartAction&) const = default;
};

/// Per-run admission state for one policy. The engine reports stage completions and polls for
/// the stages it may start; everything is FCFS by task id.
class Dispatcher {
public:
    Dispatcher(const Policy& policy, std::span<const TaskInstance> tasks);

    Placement placement(int task) const { return placement_.at(static_cast<std::size_t>(task)); }
    /// Cores the shared pool may occupy; infinity when uncapped.
    double pool_cores() const { return pool_cores_; }
    const MicroBatchPlan& plan() const { return plan_; }

    /// Starts permitted now. Returned stages are considered running.
    std::vector<StartAction> poll();
    void complete(int task, std::size_t stage);

    bool finished() const { return done_count_ == tasks_.size(); }

private:
    bool batch_admitted(int batch) const;
    int index_of(int task) const;

    std::span<const TaskInstance> tasks_;
    bool sequential_ = false;
    bool overlap_ = false;
    double pool_cores_ = std::numeric_limits<double>::infinity();
    std::size_t pool_workers_ = std::numeric_limits<std::size_t>::max();
    std::size_t pool_cpu_running_ = 0;
    std::vector<Placement> placement_;
    MicroBatchPlan plan_;
    std::vector<int> batch_of_;
    std::vector<std::size_t> next_stage_;
    std::vector<char> running_;
    std::vector<std::size_t> batch_done_;
    std::vector<std::size_t> batch_prefix_done_;
    std::size_t in_flight_ = 0;
    std::size_t done_count_ = 0;
};

}  // namespace agentsched
