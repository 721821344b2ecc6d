#include "nirsgaf/recording.hpp"

#include <cmath>

#include "nirsgaf/errors.hpp"

namespace nirsgaf {

const char* task_name(Task t) {
    switch (t) {
        case Task::MI: return "MI";
        case Task::MA: return "MA";
        case Task::IS: return "IS";
    }
    return "?";
}

Task task_from_name(const std::string& name) {
    if (name == "MI") return Task::MI;
    if (name == "MA") return Task::MA;
    if (name == "IS") return Task::IS;
    throw DataError("unknown task \"" + name + "\" (expected MI, MA or IS)");
}

Task task_from_index(int i) {
    if (i < 0 || i >= kNumTasks) throw DataError("task index out of range: " + std::to_string(i));
    return static_cast<Task>(i);
}

void Recording::validate() const {
    if (sample_rate_hz <= 0.0) throw DataError("sample_rate_hz must be positive");
    if (channels.empty()) throw DataError("recording has no channels");

    const std::size_t len = n_samples();
    for (const auto& ch : channels) {
        if (ch.od_wl1.size() != len || ch.od_wl2.size() != len)
            throw DataError("channel " + ch.channel_id + " series length differs");
        for (std::size_t i = 0; i < len; ++i)
            if (!std::isfinite(ch.od_wl1[i]) || !std::isfinite(ch.od_wl2[i]))
                throw DataError("channel " + ch.channel_id + " has non-finite sample at index " +
                                std::to_string(i));
    }

    const auto pre = static_cast<std::size_t>(std::ceil(kEpochPreSeconds * sample_rate_hz));
    const auto post = static_cast<std::size_t>(std::ceil(kEpochPostSeconds * sample_rate_hz));
    for (std::size_t m = 0; m < markers.size(); ++m) {
        const auto& mk = markers[m];
        if (m > 0 && markers[m - 1].onset_sample > mk.onset_sample)
            throw DataError("markers not sorted ascending by onset_sample");
        if (mk.onset_sample < pre)
            throw MarkerOutOfBounds(m, "onset " + std::to_string(mk.onset_sample) +
                                           " leaves less than 5 s of pre-trial signal");
        if (mk.onset_sample + post > len)
            throw MarkerOutOfBounds(m, "onset " + std::to_string(mk.onset_sample) +
                                           " leaves less than 25 s of post-trial signal");
    }
}

}  // namespace nirsgaf
