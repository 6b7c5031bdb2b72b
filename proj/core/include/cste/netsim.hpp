#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cste/domain.hpp"

namespace cste {

enum class InteractionKind { Forward, Compute };

std::string to_string(InteractionKind kind);
InteractionKind interaction_kind_from_string(const std::string& s);

/// One logged interaction. Forward records carry per-task packet counters for
/// a relay hop; Compute records carry the binary execution outcome at an edge
/// device. Unused fields stay zero.
struct InteractionRecord {
    int task_index = 0;
    DeviceId trustor;
    DeviceId trustee;
    InteractionKind kind = InteractionKind::Forward;
    std::int64_t p_tot = 0;   // packets sent on the hop
    std::int64_t p_lost = 0;  // packets lost in transit
    std::int64_t p_rec = 0;   // packets received by the trustee
    std::int64_t p_tra = 0;   // packets successfully forwarded
    int outcome = 0;          // Compute: 1 success, 0 failure

    bool operator==(const InteractionRecord&) const = default;
};

/// Throws if the record violates its counter invariants; `context` prefixes
/// the error message.
void validate_record(const InteractionRecord& record, const std::string& context);

/// Runs n_tasks synthetic tasks over the topology. Each task picks a random
/// terminal initiator, samples a loop-erased random walk to an edge device,
/// and logs one Forward record per relay hop plus one Compute record at the
/// destination. Packet losses and forwards are binomial draws from the
/// receiving device's behavior profile. Deterministic under seed.
std::vector<InteractionRecord> run_workload(const Topology& topology, int n_tasks,
                                            int packets_per_task, std::uint64_t seed);

/// CSV round-trip; header: task,trustor,trustee,kind,p_tot,p_lost,p_rec,p_tra,outcome
void persist_records(const std::vector<InteractionRecord>& records,
                     const std::filesystem::path& path);
std::vector<InteractionRecord> load_records(const std::filesystem::path& path);

}  // namespace cste
