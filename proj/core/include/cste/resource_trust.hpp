#pragma once

#include "cste/domain.hpp"

namespace cste {

/// First-order radio model: receiving costs per-bit electronics energy,
/// transmitting adds a distance-squared amplifier term.
struct RadioModel {
    double e_elec = 50e-9;   // J/bit
    double e_amp = 100e-12;  // J/bit/m^2
};

double radio_receive_energy(const RadioModel& radio, double size_bits);
double radio_transmit_energy(const RadioModel& radio, double size_bits, double distance);

/// Energy to execute a task: epsilon * cpu_ghz^2 * density * size. CPU
/// frequency is in GHz; with epsilon = 1e-11 that puts typical tasks in the
/// tens of joules.
double compute_energy(double cpu_ghz, double processing_density, double size_bits,
                      double epsilon);

constexpr double kDefaultCpuEpsilon = 1e-11;

/// Forwarding gate: idle, storage for the payload, and energy to both receive
/// and retransmit it over `next_hop_distance`. All bounds inclusive.
int resource_trust_tf(const Device& device, const Task& task, double next_hop_distance,
                      const RadioModel& radio);

/// Execution gate for an edge-computing device: idle, storage, and energy for
/// the task's full cycle count.
int resource_trust_ec(const Device& device, const Task& task,
                      double epsilon = kDefaultCpuEpsilon);

/// Longest link incident to the device; used as a conservative stand-in for
/// the unknown next-hop distance when gating ahead of path planning. 0 for an
/// unlinked device.
double max_link_distance(const Topology& topology, const DeviceId& id);

}  // namespace cste
