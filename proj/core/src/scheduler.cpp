#include "agentsched/scheduler.hpp"

#include "agentsched/errors.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace agentsched {

namespace {

constexpr std::array<std::string_view, 7> kPolicyNames{
    "sequential", "multithreading", "multiprocessing", "cgam", "cgam_overlap", "maws", "maws_cgam",
};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("policy theta must lie in (0, 1)");
}
void check_positive(int v, const char* what) {
    if (v < 1) throw ConfigError(std::string("policy ") + what + " must be >= 1");
}

}  // namespace

std::span<const std::string_view> policy_names() { return kPolicyNames; }

std::string_view Policy::name() const { return kPolicyNames.at(variant.index()); }

std::string Policy::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << name();
    std::visit(overloaded{
                   [](const Sequential&) {},
                   [&](const MultiThreading& p) { os << " pool_size=" << p.pool_size; },
                   [](const MultiProcessing&) {},
                   [&](const Cgam& p) { os << " b_cap=" << p.b_cap; },
                   [&](const CgamOverlap& p) { os << " b_cap=" << p.b_cap; },
                   [&](const Maws& p) { os << " theta=" << p.theta << " thread_pool_cores=" << p.thread_pool_cores; },
                   [&](const MawsCgam& p) {
                       os << " theta=" << p.theta << " thread_pool_cores=" << p.thread_pool_cores
                          << " b_cap=" << p.b_cap;
                   },
               },
               variant);
    return os.str();
}

double Policy::theta() const {
    if (const auto* m = std::get_if<Maws>(&variant)) return m->theta;
    if (const auto* m = std::get_if<MawsCgam>(&variant)) return m->theta;
    return kDefaultTheta;
}

void Policy::validate() const {
    std::visit(overloaded{
                   [](const Sequential&) {},
                   [](const MultiThreading& p) {
                       if (p.pool_size < 0) throw ConfigError("policy pool_size must be >= 1 (or 0 for one per task)");
                   },
                   [](const MultiProcessing&) {},
                   [](const Cgam& p) { check_positive(p.b_cap, "b_cap"); },
                   [](const CgamOverlap& p) { check_positive(p.b_cap, "b_cap"); },
                   [](const Maws& p) {
                       check_theta(p.theta);
                       check_positive(p.thread_pool_cores, "thread_pool_cores");
                   },
                   [](const MawsCgam& p) {
                       check_theta(p.theta);
                       check_positive(p.thread_pool_cores, "thread_pool_cores");
                       check_positive(p.b_cap, "b_cap");
                   },
               },
               variant);
}

MicroBatchPlan plan_microbatches(std::span<const int> task_ids, int b_cap) {
    if (b_cap < 1) throw ConfigError("b_cap must be >= 1");
    MicroBatchPlan plan;
    const auto cap = static_cast<std::size_t>(b_cap);
    for (std::size_t i = 0; i < task_ids.size(); i += cap) {
        const auto n = std::min(cap, task_ids.size() - i);
        plan.batches.emplace_back(task_ids.begin() + static_cast<std::ptrdiff_t>(i),
                                  task_ids.begin() + static_cast<std::ptrdiff_t>(i + n));
    }
    return plan;
}

MawsPartition maws_partition(std::span<const TaskInstance> tasks, double theta) {
    check_theta(theta);
    MawsPartition out;
    for (const auto& t : tasks) {
        if (classify_task(*t.pipeline, theta) == TaskClass::CpuHeavy)
            out.process_set.push_back(t.id);
        else
            out.thread_set.push_back(t.id);
    }
    return out;
}

std::string_view to_string(Placement p) { return p == Placement::Process ? "process" : "pool"; }

Placement parse_placement(std::string_view s) {
    if (s == "process") return Placement::Process;
    if (s == "pool") return Placement::Pool;
    throw ConfigError("unknown placement '" + std::string(s) + "'");
}

Dispatcher::Dispatcher(const Policy& policy, std::span<const TaskInstance> tasks)
    : tasks_(tasks),
      placement_(tasks.size(), Placement::Process),
      batch_of_(tasks.size(), -1),
      next_stage_(tasks.size(), 0),
      running_(tasks.size(), 0) {
    policy.validate();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].id != static_cast<int>(i)) throw ConfigError("task ids must be 0..n-1 in order");
    }

    std::vector<int> process_ids;
    int b_cap = 0;
    std::visit(overloaded{
                   [&](const Sequential&) { sequential_ = true; },
                   [&](const MultiThreading& p) {
                       std::fill(placement_.begin(), placement_.end(), Placement::Pool);
                       if (p.pool_size > 0) pool_workers_ = static_cast<std::size_t>(p.pool_size);
                   },
                   [](const MultiProcessing&) {},
                   [&](const Cgam& p) { b_cap = p.b_cap; },
                   [&](const CgamOverlap& p) {
                       b_cap = p.b_cap;
                       overlap_ = true;
                   },
                   [&](const Maws& p) {
                       for (int id : maws_partition(tasks, p.theta).thread_set)
                           placement_[static_cast<std::size_t>(id)] = Placement::Pool;
                       pool_cores_ = p.thread_pool_cores;
                   },
                   [&](const MawsCgam& p) {
                       for (int id : maws_partition(tasks, p.theta).thread_set)
                           placement_[static_cast<std::size_t>(id)] = Placement::Pool;
                       pool_cores_ = p.thread_pool_cores;
                       b_cap = p.b_cap;
                   },
               },
               policy.variant);

    if (b_cap > 0) {
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (placement_[i] == Placement::Process) process_ids.push_back(static_cast<int>(i));
        plan_ = plan_microbatches(process_ids, b_cap);
        for (std::size_t k = 0; k < plan_.batches.size(); ++k)
            for (int id : plan_.batches[k]) batch_of_[static_cast<std::size_t>(id)] = static_cast<int>(k);
        batch_done_.assign(plan_.batches.size(), 0);
        batch_prefix_done_.assign(plan_.batches.size(), 0);
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (batch_of_[i] >= 0 && tasks[i].pipeline->cpu_prefix_length() == 0)
                ++batch_prefix_done_[static_cast<std::size_t>(batch_of_[i])];
        }
    }
}

bool Dispatcher::batch_admitted(int batch) const {
    if (batch <= 0) return true;
    const auto k = static_cast<std::size_t>(batch);
    if (!overlap_) return batch_done_[k - 1] == plan_.batches[k - 1].size();
    if (batch_prefix_done_[k - 1] != plan_.batches[k - 1].size()) return false;
    return k < 2 || batch_done_[k - 2] == plan_.batches[k - 2].size();
}

int Dispatcher::index_of(int task) const {
    if (task < 0 || static_cast<std::size_t>(task) >= tasks_.size())
        throw InternalError("dispatch: task " + std::to_string(task) + " is not part of the plan");
    return task;
}

std::vector<StartAction> Dispatcher::poll() {
    std::vector<StartAction> out;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const auto& task = tasks_[i];
        const std::size_t stage = next_stage_[i];
        if (running_[i] || stage >= task.stage_count()) continue;
        if (sequential_ && in_flight_ > 0 && stage == 0) continue;
        if (stage == 0 && !batch_admitted(batch_of_[i])) continue;
        const bool pool_cpu =
            placement_[i] == Placement::Pool && task.stage(stage).kind == StageKind::CpuTool;
        if (pool_cpu && pool_cpu_running_ >= pool_workers_) continue;

        running_[i] = 1;
        if (pool_cpu) ++pool_cpu_running_;
        if (stage == 0) ++in_flight_;
        out.push_back({static_cast<int>(i), stage});
    }
    return out;
}

void Dispatcher::complete(int task, std::size_t stage) {
    const auto i = static_cast<std::size_t>(index_of(task));
    if (!running_[i] || next_stage_[i] != stage)
        throw InternalError("dispatch: completion for stage " + std::to_string(stage) + " of task " +
                            std::to_string(task) + " which is not running");
    const auto& t = tasks_[i];
    running_[i] = 0;
    if (placement_[i] == Placement::Pool && t.stage(stage).kind == StageKind::CpuTool) --pool_cpu_running_;
    ++next_stage_[i];
    const int batch = batch_of_[i];
    if (batch >= 0 && next_stage_[i] == t.pipeline->cpu_prefix_length())
        ++batch_prefix_done_[static_cast<std::size_t>(batch)];
    if (next_stage_[i] == t.stage_count()) {
        --in_flight_;
        ++done_count_;
        if (batch >= 0) ++batch_done_[static_cast<std::size_t>(batch)];
    }
}

}  // namespace agentsched
