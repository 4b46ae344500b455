// Copyright 2026 The sabrsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SABR_TRACES_HPP_
#define SABR_TRACES_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sabr/common.hpp"

namespace sabr {

/// One bandwidth measurement. The bandwidth holds from `time_s` until the
/// next sample's timestamp (step-function semantics).
struct BandwidthSample {
  double time_s = 0.0;
  double mbps = 0.0;
};

/// Timestamped bandwidth trace driving download timing.
struct NetworkTrace {
  std::string id;
  std::vector<BandwidthSample> samples;

  /// Total span covered by the trace. The last sample's segment is assumed to
  /// last as long as the mean gap between samples, so traces without an
  /// explicit end marker still have a well-defined loop length.
  double span_s() const;
};

/// Per-chunk sizes at each bitrate level plus per-chunk viewer retention.
struct VideoAsset {
  std::string id;
  std::vector<std::vector<double>> chunk_sizes_mb;  // [chunk][level]
  std::vector<double> retention;                    // retention[0] == 1.0
  double chunk_duration_s = 1.0;

  int chunk_count() const { return static_cast<int>(chunk_sizes_mb.size()); }
  int level_count() const {
    return chunk_sizes_mb.empty() ? 0
                                  : static_cast<int>(chunk_sizes_mb[0].size());
  }
};

struct TraceCorpus {
  std::vector<NetworkTrace> network_traces;
  std::vector<VideoAsset> videos;
};

/// Knobs of the synthetic corpus generator. Bandwidth is piecewise-constant
/// with lognormal levels and exponentially distributed segment durations;
/// retention decays multiplicatively per chunk.
struct GeneratorConfig {
  int traces_per_regime = 8;
  std::vector<double> regime_means_mbps = {1.0, 2.2, 4.0};  // low, medium, high
  std::vector<std::string> regime_names = {"low", "medium", "high"};
  double trace_duration_s = 300.0;
  double segment_mean_s = 4.0;
  double level_sigma = 0.35;
  double bandwidth_floor_mbps = 0.05;
  int videos = 48;
  int chunks_min = 12;
  int chunks_max = 24;
  double retention_decay_min = 0.01;
  double retention_decay_max = 0.12;
  std::vector<double> ladder_kbps = {750.0, 1200.0, 1850.0};
  double size_jitter = 0.12;  // relative per-chunk size variation
};

// -- validation ---------------------------------------------------------

/// Throws ValidationError unless timestamps strictly increase, every
/// bandwidth is positive, and there are at least two samples.
void validate(const NetworkTrace& trace);

/// Throws ValidationError unless retention starts at 1.0 and is monotone
/// non-increasing in [0,1], and sizes strictly increase with bitrate level.
/// `expected_levels` < 0 skips the column-count check.
void validate(const VideoAsset& asset, int expected_levels = -1);

// -- file I/O ------------------------------------------------------------

// Network trace file: one "timestamp_seconds bandwidth_mbps" per line.
NetworkTrace load_network_trace(const std::string& path);
void save_network_trace(const NetworkTrace& trace, const std::string& path);

// Video asset file: header "chunks=N levels=L", then N lines of
// "size_mb_level1 ... size_mb_levelL retention".
VideoAsset load_video_asset(const std::string& path);
void save_video_asset(const VideoAsset& asset, const std::string& path);

/// Loads every trace under `<dir>/traces/*.txt` and every asset under
/// `<dir>/videos/*.txt`, in sorted filename order.
TraceCorpus load_corpus(const std::string& dir);
void save_corpus(const TraceCorpus& corpus, const std::string& dir);

/// Parses a "key = value" generator config file (# starts a comment).
GeneratorConfig load_generator_config(const std::string& path);

// -- generation & splitting ----------------------------------------------

/// Pure function of (config, seed); every produced object validates.
TraceCorpus generate_synthetic_corpus(const GeneratorConfig& config,
                                      std::uint64_t seed);

/// Seeded shuffle split; |train traces| = round(ratio * N) and likewise for
/// videos. Throws ConfigError unless 0 < ratio < 1.
std::pair<TraceCorpus, TraceCorpus> split_corpus(const TraceCorpus& corpus,
                                                 double ratio,
                                                 std::uint64_t seed);

}  // namespace sabr

#endif  // SABR_TRACES_HPP_
