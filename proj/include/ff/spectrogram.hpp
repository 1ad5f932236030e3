#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ff/common.hpp"

namespace ff {

// Time-frequency matrix. Rows are frequency bins (low to high), columns are
// time frames.
struct Spectrogram {
    Eigen::MatrixXd values;        // n x m
    std::vector<double> freqs_hz;  // length n, strictly increasing
    double frame_hop_s = 0.0;
    std::string electrode_id;

    int n_bins() const { return static_cast<int>(values.rows()); }
    int n_frames() const { return static_cast<int>(values.cols()); }

    void validate() const {
        require(static_cast<int>(freqs_hz.size()) == n_bins(),
                "spectrogram: freqs length must equal row count");
        for (size_t i = 1; i < freqs_hz.size(); ++i)
            require(freqs_hz[i] > freqs_hz[i - 1], "spectrogram: freqs must be increasing");
        require(values.allFinite(), "spectrogram: values must be finite");
    }
};

}  // namespace ff
