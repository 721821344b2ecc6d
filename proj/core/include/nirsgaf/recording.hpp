// Raw-recording data model: dual-wavelength optical-density traces per
// channel plus trial markers. Every epoch needs 5 s of signal before its
// onset and 25 s after; marker bounds are checked against that window.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nirsgaf {

enum class Task : int { MI = 0, MA = 1, IS = 2 };

inline constexpr int kNumTasks = 3;
inline constexpr double kEpochPreSeconds = 5.0;   // signal needed before onset
inline constexpr double kEpochPostSeconds = 25.0; // signal needed after onset

const char* task_name(Task t);
Task task_from_name(const std::string& name);      // throws DataError
Task task_from_index(int i);                       // throws DataError

struct TrialMarker {
    std::size_t onset_sample = 0;
    Task task = Task::MI;
};

struct ChannelSeries {
    std::string channel_id;
    std::vector<double> od_wl1;  // optical-density change, first wavelength
    std::vector<double> od_wl2;  // second wavelength
};

struct Recording {
    std::string subject_id;
    double sample_rate_hz = 13.3;
    std::vector<ChannelSeries> channels;
    std::vector<TrialMarker> markers;

    std::size_t n_samples() const {
        return channels.empty() ? 0 : channels.front().od_wl1.size();
    }

    // Throws DataError / MarkerOutOfBounds when an invariant is violated.
    void validate() const;
};

}  // namespace nirsgaf
