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

#include "sabr/traces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace sabr {

namespace fs = std::filesystem;

double NetworkTrace::span_s() const {
  if (samples.size() < 2) return 0.0;
  const double first = samples.front().time_s;
  const double last = samples.back().time_s;
  const double mean_gap = (last - first) / static_cast<double>(samples.size() - 1);
  return last - first + mean_gap;
}

void validate(const NetworkTrace& trace) {
  if (trace.samples.size() < 2) {
    throw ValidationError("network trace '" + trace.id +
                          "': needs at least 2 samples");
  }
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    if (!(s.mbps > 0.0) || !std::isfinite(s.mbps)) {
      throw ValidationError("network trace '" + trace.id +
                            "': non-positive bandwidth at sample " +
                            std::to_string(i));
    }
    if (i > 0 && !(s.time_s > trace.samples[i - 1].time_s)) {
      throw ValidationError("network trace '" + trace.id +
                            "': timestamps not strictly increasing at sample " +
                            std::to_string(i));
    }
  }
}

void validate(const VideoAsset& asset, int expected_levels) {
  const int n = asset.chunk_count();
  if (n == 0) throw ValidationError("video '" + asset.id + "': no chunks");
  if (asset.retention.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("video '" + asset.id +
                          "': retention length != chunk count");
  }
  if (asset.chunk_duration_s != 1.0) {
    throw ValidationError("video '" + asset.id + "': chunk duration must be 1 s");
  }
  if (asset.retention[0] != 1.0) {
    throw ValidationError("video '" + asset.id +
                          "': retention of the first chunk must be 1.0");
  }
  for (int m = 0; m < n; ++m) {
    const double p = asset.retention[m];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ValidationError("video '" + asset.id + "': retention[" +
                            std::to_string(m) + "] outside [0,1]");
    }
    if (m > 0 && p > asset.retention[m - 1]) {
      throw ValidationError("video '" + asset.id + "': retention increases at chunk " +
                            std::to_string(m));
    }
  }
  const int levels = asset.level_count();
  if (levels < 1) throw ValidationError("video '" + asset.id + "': no bitrate levels");
  if (expected_levels >= 0 && levels != expected_levels) {
    throw ValidationError("video '" + asset.id + "': expected " +
                          std::to_string(expected_levels) + " levels, found " +
                          std::to_string(levels));
  }
  for (int m = 0; m < n; ++m) {
    const auto& row = asset.chunk_sizes_mb[m];
    if (row.size() != static_cast<std::size_t>(levels)) {
      throw ValidationError("video '" + asset.id + "': ragged size row at chunk " +
                            std::to_string(m));
    }
    for (int l = 0; l < levels; ++l) {
      if (!(row[l] > 0.0) || !std::isfinite(row[l])) {
        throw ValidationError("video '" + asset.id + "': non-positive size at chunk " +
                              std::to_string(m));
      }
      if (l > 0 && !(row[l] > row[l - 1])) {
        throw ValidationError("video '" + asset.id +
                              "': sizes must strictly increase with level (chunk " +
                              std::to_string(m) + ")");
      }
    }
  }
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, const std::string& path, int lineno) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": not a number: '" +
                     tok + "'");
  }
  if (used != tok.size()) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": trailing junk in '" +
                     tok + "'");
  }
  return v;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

}  // namespace

NetworkTrace load_network_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network trace: " + path);
  NetworkTrace trace;
  trace.id = stem_of(path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 2) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'timestamp bandwidth', got " +
                       std::to_string(toks.size()) + " fields");
    }
    trace.samples.push_back(
        {parse_number(toks[0], path, lineno), parse_number(toks[1], path, lineno)});
  }
  validate(trace);
  return trace;
}

void save_network_trace(const NetworkTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& s : trace.samples) {
    out << format_double(s.time_s) << ' ' << format_double(s.mbps) << '\n';
  }
}

VideoAsset load_video_asset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open video asset: " + path);
  VideoAsset asset;
  asset.id = stem_of(path);
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++lineno;
  int chunks = -1, levels = -1;
  {
    auto toks = tokenize(line);
    for (const auto& tok : toks) {
      auto eq = tok.find('=');
      if (eq == std::string::npos) {
        throw ParseError(path + ":1: malformed header token '" + tok + "'");
      }
      const std::string key = tok.substr(0, eq);
      const int value = static_cast<int>(parse_number(tok.substr(eq + 1), path, 1));
      if (key == "chunks") {
        chunks = value;
      } else if (key == "levels") {
        levels = value;
      } else {
        throw ParseError(path + ":1: unknown header key '" + key + "'");
      }
    }
  }
  if (chunks <= 0 || levels <= 0) {
    throw ParseError(path + ":1: header must declare chunks=N levels=L");
  }
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (static_cast<int>(toks.size()) != levels + 1) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(levels) + " sizes + retention, got " +
                       std::to_string(toks.size()) + " fields");
    }
    std::vector<double> row;
    for (int l = 0; l < levels; ++l) row.push_back(parse_number(toks[l], path, lineno));
    asset.chunk_sizes_mb.push_back(std::move(row));
    asset.retention.push_back(parse_number(toks[levels], path, lineno));
  }
  if (asset.chunk_count() != chunks) {
    throw ParseError(path + ": header declares " + std::to_string(chunks) +
                     " chunks, file has " + std::to_string(asset.chunk_count()));
  }
  validate(asset);
  return asset;
}

void save_video_asset(const VideoAsset& asset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "chunks=" << asset.chunk_count() << " levels=" << asset.level_count()
      << '\n';
  for (int m = 0; m < asset.chunk_count(); ++m) {
    for (double s : asset.chunk_sizes_mb[m]) out << format_double(s) << ' ';
    out << format_double(asset.retention[m]) << '\n';
  }
}

TraceCorpus load_corpus(const std::string& dir) {
  TraceCorpus corpus;
  const fs::path traces_dir = fs::path(dir) / "traces";
  const fs::path videos_dir = fs::path(dir) / "videos";
  if (!fs::is_directory(traces_dir) || !fs::is_directory(videos_dir)) {
    throw ValidationError("corpus directory must contain traces/ and videos/: " + dir);
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(traces_dir)) {
    if (entry.path().extension() == ".txt") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) corpus.network_traces.push_back(load_network_trace(p));
  paths.clear();
  for (const auto& entry : fs::directory_iterator(videos_dir)) {
    if (entry.path().extension() == ".txt") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) corpus.videos.push_back(load_video_asset(p));
  if (corpus.network_traces.empty() || corpus.videos.empty()) {
    throw ValidationError("corpus is empty: " + dir);
  }
  return corpus;
}

void save_corpus(const TraceCorpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "traces");
  fs::create_directories(fs::path(dir) / "videos");
  for (const auto& trace : corpus.network_traces) {
    save_network_trace(trace, (fs::path(dir) / "traces" / (trace.id + ".txt")).string());
  }
  for (const auto& video : corpus.videos) {
    save_video_asset(video, (fs::path(dir) / "videos" / (video.id + ".txt")).string());
  }
}

GeneratorConfig load_generator_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generator config: " + path);
  GeneratorConfig cfg;
  std::string line;
  int lineno = 0;
  auto parse_list = [&](const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, path, lineno));
    return out;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (!tokenize(line).empty()) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "traces_per_regime") cfg.traces_per_regime = static_cast<int>(parse_number(value, path, lineno));
    else if (key == "regime_means_mbps") cfg.regime_means_mbps = parse_list(value);
    else if (key == "trace_duration_s") cfg.trace_duration_s = parse_number(value, path, lineno);
    else if (key == "segment_mean_s") cfg.segment_mean_s = parse_number(value, path, lineno);
    else if (key == "level_sigma") cfg.level_sigma = parse_number(value, path, lineno);
    else if (key == "bandwidth_floor_mbps") cfg.bandwidth_floor_mbps = parse_number(value, path, lineno);
    else if (key == "videos") cfg.videos = static_cast<int>(parse_number(value, path, lineno));
    else if (key == "chunks_min") cfg.chunks_min = static_cast<int>(parse_number(value, path, lineno));
    else if (key == "chunks_max") cfg.chunks_max = static_cast<int>(parse_number(value, path, lineno));
    else if (key == "retention_decay_min") cfg.retention_decay_min = parse_number(value, path, lineno);
    else if (key == "retention_decay_max") cfg.retention_decay_max = parse_number(value, path, lineno);
    else if (key == "ladder_kbps") cfg.ladder_kbps = parse_list(value);
    else if (key == "size_jitter") cfg.size_jitter = parse_number(value, path, lineno);
    else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (cfg.regime_names.size() != cfg.regime_means_mbps.size()) {
    cfg.regime_names.clear();
    for (std::size_t i = 0; i < cfg.regime_means_mbps.size(); ++i) {
      cfg.regime_names.push_back("regime" + std::to_string(i));
    }
  }
  return cfg;
}

TraceCorpus generate_synthetic_corpus(const GeneratorConfig& config,
                                      std::uint64_t seed) {
  if (config.videos <= 0 || config.traces_per_regime <= 0 ||
      config.regime_means_mbps.empty()) {
    throw ConfigError("generator config must request at least one video and one trace");
  }
  if (config.chunks_min < 1 || config.chunks_max < config.chunks_min) {
    throw ConfigError("generator config: bad chunk count range");
  }
  if (config.retention_decay_min < 0.0 ||
      config.retention_decay_max < config.retention_decay_min) {
    throw ConfigError("generator config: bad retention decay range");
  }
  if (config.ladder_kbps.size() < 2) {
    throw ConfigError("generator config: ladder needs at least 2 levels");
  }
  for (std::size_t l = 1; l < config.ladder_kbps.size(); ++l) {
    if (config.ladder_kbps[l] <= config.ladder_kbps[l - 1]) {
      throw ConfigError("generator config: ladder must strictly increase");
    }
  }

  TraceCorpus corpus;
  for (std::size_t r = 0; r < config.regime_means_mbps.size(); ++r) {
    const double mean = config.regime_means_mbps[r];
    for (int i = 0; i < config.traces_per_regime; ++i) {
      std::mt19937_64 rng(derive_seed(seed, 1000 + r * 1000 + i));
      std::exponential_distribution<double> seg_len(1.0 / config.segment_mean_s);
      // lognormal with E[X] = mean.
      const double mu = std::log(mean) - 0.5 * config.level_sigma * config.level_sigma;
      std::lognormal_distribution<double> level(mu, config.level_sigma);
      NetworkTrace trace;
      trace.id = "trace_" + config.regime_names[r] + "_" +
                 (i < 10 ? "0" : "") + std::to_string(i);
      double t = 0.0;
      while (t < config.trace_duration_s) {
        const double bw = std::max(config.bandwidth_floor_mbps, level(rng));
        trace.samples.push_back({t, bw});
        t += std::max(0.25, seg_len(rng));
      }
      if (trace.samples.size() < 2) {
        trace.samples.push_back({t, trace.samples.back().mbps});
      }
      validate(trace);
      corpus.network_traces.push_back(std::move(trace));
    }
  }

  for (int v = 0; v < config.videos; ++v) {
    std::mt19937_64 rng(derive_seed(seed, 2000000 + v));
    std::uniform_int_distribution<int> chunk_count(config.chunks_min, config.chunks_max);
    std::uniform_real_distribution<double> decay(config.retention_decay_min,
                                                 config.retention_decay_max);
    std::uniform_real_distribution<double> jitter(-config.size_jitter, config.size_jitter);
    VideoAsset asset;
    asset.id = "video_" + std::string(v < 10 ? "00" : (v < 100 ? "0" : "")) +
               std::to_string(v);
    const int n = chunk_count(rng);
    const double d = decay(rng);
    double p = 1.0;
    for (int m = 0; m < n; ++m) {
      asset.retention.push_back(p);
      p *= 1.0 - d;
      std::vector<double> row;
      const double scale = 1.0 + jitter(rng);
      for (double kbps : config.ladder_kbps) {
        // nominal 1 s chunk size, shared per-chunk complexity jitter
        row.push_back(kbps / 8000.0 * scale);
      }
      asset.chunk_sizes_mb.push_back(std::move(row));
    }
    validate(asset);
    corpus.videos.push_back(std::move(asset));
  }
  return corpus;
}

std::pair<TraceCorpus, TraceCorpus> split_corpus(const TraceCorpus& corpus,
                                                 double ratio,
                                                 std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie strictly inside (0,1)");
  }
  TraceCorpus train, test;
  auto split_indices = [&](std::size_t n, std::uint64_t stream) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(derive_seed(seed, stream));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(n)));
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < take && i < n; ++i) in_train[idx[i]] = true;
    return in_train;
  };
  const auto trace_train = split_indices(corpus.network_traces.size(), 1);
  for (std::size_t i = 0; i < corpus.network_traces.size(); ++i) {
    (trace_train[i] ? train : test).network_traces.push_back(corpus.network_traces[i]);
  }
  const auto video_train = split_indices(corpus.videos.size(), 2);
  for (std::size_t i = 0; i < corpus.videos.size(); ++i) {
    (video_train[i] ? train : test).videos.push_back(corpus.videos[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace sabr
