#pragma once

#include <random>
#include <utility>
#include <vector>

namespace bcrn {

/// Per-transmitter parameters of the secondary network.
struct TransmitterConfig {
    int queue_capacity = 7;           // Q_n, data units
    int energy_capacity = 5;          // C_n, energy units
    int harvest_rate = 1;             // e^h_n, energy units per busy slot spent harvesting
    int active_energy = 1;            // e^a_n, energy units per active-transmission slot
    int backscatter_rate = 1;         // d^b_n, data units per backscatter slot
    int active_rate = 2;              // d^a_n, data units per active slot
    double success_backscatter = 1.0; // S^b_n
    double success_active = 1.0;      // S^a_n
    double arrival_rate = 1.0;        // lambda_n, mean data units arriving per frame
};

struct RadioConfig {
    int frame_slots = 7; // Y, slots per frame
    int busy_min = 1;    // inclusive range of the busy channel period
    int busy_max = 6;
    // When set, transmission phases credit payload * S instead of drawing a
    // Bernoulli outcome per slot. Queue/energy dynamics are unaffected.
    bool expected_success = false;
    std::vector<TransmitterConfig> transmitters;

    int num_transmitters() const { return static_cast<int>(transmitters.size()); }
    void validate() const; // throws std::invalid_argument
};

struct TransmitterState {
    int queue = 0;  // q_n in [0, Q_n]
    int energy = 0; // c_n in [0, C_n]

    bool operator==(const TransmitterState&) const = default;
};

/// Time-slot allocation for one frame.
struct Allocation {
    int harvest_budget = 0;       // mu
    std::vector<int> backscatter; // alpha_n
    std::vector<int> active;      // beta_n
};

struct FrameOutcome {
    std::vector<double> delivered_backscatter;
    std::vector<double> delivered_active;
    double total_delivered = 0.0; // D
    int dropped_arrivals = 0;     // units lost to queue overflow at frame end
};

/// Busy-slot count for the next frame, uniform over [busy_min, busy_max].
int sample_busy_slots(std::mt19937_64& rng, const RadioConfig& cfg);

/// Energy update over the busy period: the transmitter harvests in every busy
/// slot it does not spend backscattering. Queue unchanged.
TransmitterState harvest_phase(TransmitterState s, int busy, int alpha,
                               const TransmitterConfig& cfg);

/// Backscatter up to alpha slots. Each slot drains min(d^b, q) from the queue
/// whether or not the transmission succeeds; only successful slots count
/// toward `delivered`. Energy unchanged.
std::pair<TransmitterState, double> backscatter_phase(TransmitterState s, int alpha,
                                                      const TransmitterConfig& cfg,
                                                      std::mt19937_64& rng,
                                                      bool expected_success = false);

/// Active-transmit up to beta slots. A slot runs only while the queue is
/// nonempty and stored energy covers e^a; it drains min(d^a, q) and consumes
/// e^a energy units.
std::pair<TransmitterState, double> active_phase(TransmitterState s, int beta,
                                                 const TransmitterConfig& cfg,
                                                 std::mt19937_64& rng,
                                                 bool expected_success = false);

/// Poisson(lambda) data units arrive; overflow beyond Q_n is dropped.
TransmitterState arrival_phase(TransmitterState s, std::mt19937_64& rng,
                               const TransmitterConfig& cfg, int* dropped = nullptr);

/// One full frame for all transmitters: harvest, backscatter, active, arrivals.
/// Throws std::invalid_argument when the allocation violates the busy-slot or
/// frame-budget constraint.
FrameOutcome step_radio(std::vector<TransmitterState>& states, int busy,
                        const Allocation& alloc, const RadioConfig& cfg,
                        std::mt19937_64& rng);

}  // namespace bcrn
