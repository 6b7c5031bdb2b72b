#include "cste/resource_trust.hpp"

#include <algorithm>
#include <stdexcept>

namespace cste {

namespace {

void validate_radio(const RadioModel& radio) {
    if (radio.e_elec <= 0.0 || radio.e_amp <= 0.0)
        throw std::invalid_argument("radio model: energies must be positive");
}

}  // namespace

double radio_receive_energy(const RadioModel& radio, double size_bits) {
    validate_radio(radio);
    return radio.e_elec * size_bits;
}

double radio_transmit_energy(const RadioModel& radio, double size_bits, double distance) {
    validate_radio(radio);
    if (distance < 0.0) throw std::invalid_argument("radio model: negative distance");
    return radio.e_elec * size_bits + radio.e_amp * size_bits * distance * distance;
}

double compute_energy(double cpu_ghz, double processing_density, double size_bits,
                      double epsilon) {
    if (cpu_ghz <= 0.0) throw std::invalid_argument("compute energy: cpu frequency must be > 0");
    if (epsilon <= 0.0) throw std::invalid_argument("compute energy: epsilon must be > 0");
    return epsilon * cpu_ghz * cpu_ghz * processing_density * size_bits;
}

int resource_trust_tf(const Device& device, const Task& task, double next_hop_distance,
                      const RadioModel& radio) {
    validate_task(task);
    if (!device.idle) return 0;
    if (device.storage_bits < task.size_bits) return 0;
    const double required = radio_receive_energy(radio, task.size_bits) +
                            radio_transmit_energy(radio, task.size_bits, next_hop_distance);
    return device.energy_j >= required ? 1 : 0;
}

int resource_trust_ec(const Device& device, const Task& task, double epsilon) {
    validate_task(task);
    const double required =
        compute_energy(device.cpu_freq_ghz, task.processing_density, task.size_bits, epsilon);
    if (!device.idle) return 0;
    if (device.storage_bits < task.size_bits) return 0;
    return device.energy_j >= required ? 1 : 0;
}

double max_link_distance(const Topology& topology, const DeviceId& id) {
    double best = 0.0;
    const Device& d = topology.at(id);
    for (const auto& [a, b] : topology.links) {
        if (a != id && b != id) continue;
        const Device& other = topology.at(a == id ? b : a);
        best = std::max(best, device_distance(d, other));
    }
    return best;
}

}  // namespace cste
