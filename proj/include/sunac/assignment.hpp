// Copyright 2026 The sunac-cpp Authors
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

// Permutation-invariant assignment restricted to same-type sources, SI-SDR,
// the forward multi-term codec loss and magnitude-mask evaluation.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "sunac/audio.hpp"
#include "sunac/error.hpp"
#include "sunac/extractor.hpp"
#include "sunac/rvq.hpp"
#include "sunac/spectral.hpp"

namespace sunac {

inline constexpr double kSiSdrEps = 1e-8;
inline constexpr double kSiSdrClampDb = 100.0;

/// Ordered (source, prompt type) pairs plus an optional mixture.
struct SourceSet {
  std::vector<AudioBuffer> sources;
  std::vector<PromptType> types;
  std::optional<AudioBuffer> mixture;

  std::size_t size() const noexcept { return sources.size(); }

  void validate() const {
    if (sources.size() != types.size()) throw ContractViolation("source set: sources and types differ in count");
    for (const AudioBuffer& s : sources) {
      if (s.size() != sources.front().size() || s.sample_rate != sources.front().sample_rate)
        throw ContractViolation("source set: all sources must share length and sample rate");
    }
    if (mixture && !sources.empty() && mixture->size() != sources.front().size())
      throw ContractViolation("source set: mixture length differs from sources");
  }
};

/// Target and distortion energies ||a s||^2 and ||a s - est||^2 with a = <est, s> / ||s||^2.
struct SiSdrTerms {
  double target = 0.0;
  double distortion = 0.0;
};

inline SiSdrTerms si_sdr_terms(const AudioBuffer& reference, const AudioBuffer& estimate) {
  if (reference.size() != estimate.size())
    throw ContractViolation("si_sdr: reference has " + std::to_string(reference.size()) + " samples, estimate " +
                            std::to_string(estimate.size()));
  double ref_energy = 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += static_cast<double>(reference.samples[i]) * reference.samples[i];
    dot += static_cast<double>(reference.samples[i]) * estimate.samples[i];
  }
  if (ref_energy == 0.0) throw InvalidReference("si_sdr: reference is identically zero");
  const double alpha = dot / ref_energy;
  SiSdrTerms terms;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double target = alpha * reference.samples[i];
    const double err = target - estimate.samples[i];
    terms.target += target * target;
    terms.distortion += err * err;
  }
  return terms;
}

/// Scale-invariant SDR in dB, clamped to [-100, 100].
inline double si_sdr(const AudioBuffer& reference, const AudioBuffer& estimate) {
  const SiSdrTerms t = si_sdr_terms(reference, estimate);
  if (t.target == 0.0) return -kSiSdrClampDb;
  const double db = 10.0 * std::log10(t.target / (t.distortion + kSiSdrEps));
  return std::clamp(db, -kSiSdrClampDb, kSiSdrClampDb);
}

/// pi[i] is the estimate index assigned to reference i.
using Permutation = std::vector<std::size_t>;

/// All permutations that only exchange indices sharing a prompt type, in lexicographic order.
inline std::vector<Permutation> restricted_permutations(const std::vector<PromptType>& types) {
  if (types.empty()) throw InvalidArgument("restricted_permutations: empty type list");
  std::map<PromptType, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < types.size(); ++i) groups[types[i]].push_back(i);

  std::vector<Permutation> out{Permutation(types.size())};
  for (std::size_t i = 0; i < types.size(); ++i) out.front()[i] = i;
  // cross product of per-group permutations
  for (const auto& [_, idx] : groups) {
    if (idx.size() < 2) continue;
    std::vector<Permutation> next;
    for (const Permutation& base : out) {
      std::vector<std::size_t> images = idx;
      do {
        Permutation p = base;
        for (std::size_t k = 0; k < idx.size(); ++k) p[idx[k]] = images[k];
        next.push_back(std::move(p));
      } while (std::next_permutation(images.begin(), images.end()));
    }
    out = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Assignment {
  Permutation permutation;
  double score = 0.0;                // total SI-SDR (dB) of the chosen pairing
  std::vector<double> per_source;    // SI-SDR of reference i vs estimate permutation[i]
};

/// Maximizes the summed SI-SDR over restricted_permutations(types); ties keep the lexicographically first.
inline Assignment best_assignment(const SourceSet& references, const std::vector<AudioBuffer>& estimates) {
  references.validate();
  if (references.size() == 0) throw InvalidArgument("best_assignment: no sources");
  if (references.size() != estimates.size())
    throw ContractViolation("best_assignment: " + std::to_string(references.size()) + " references vs " +
                            std::to_string(estimates.size()) + " estimates");
  const std::size_t S = references.size();
  std::vector<std::vector<double>> table(S, std::vector<double>(S, 0.0));
  std::vector<std::vector<bool>> known(S, std::vector<bool>(S, false));
  auto score = [&](std::size_t i, std::size_t j) {
    if (!known[i][j]) {
      table[i][j] = si_sdr(references.sources[i], estimates[j]);
      known[i][j] = true;
    }
    return table[i][j];
  };

  Assignment best;
  bool have = false;
  for (const Permutation& p : restricted_permutations(references.types)) {
    double total = 0.0;
    for (std::size_t i = 0; i < S; ++i) total += score(i, p[i]);
    if (!have || total > best.score) {
      best.permutation = p;
      best.score = total;
      have = true;
    }
  }
  best.per_source.resize(S);
  for (std::size_t i = 0; i < S; ++i) best.per_source[i] = score(i, best.permutation[i]);
  return best;
}

struct MelScale {
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  std::size_t n_mels = 0;
};

inline std::vector<MelScale> default_mel_scales() { return {{512, 128, 40}, {1024, 256, 80}, {2048, 512, 160}}; }

/// Sum over scales of the mean absolute log10-mel difference.
inline double mel_loss(const AudioBuffer& x, const AudioBuffer& y, const std::vector<MelScale>& scales = default_mel_scales()) {
  if (x.size() != y.size()) throw ContractViolation("mel_loss: length mismatch");
  double total = 0.0;
  for (const MelScale& s : scales) {
    const Matrix a = log_mel_spectrogram(x, s.n_fft, s.hop, s.n_mels);
    const Matrix b = log_mel_spectrogram(y, s.n_fft, s.hop, s.n_mels);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      acc += std::abs(static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]));
    total += acc / static_cast<double>(a.size());
  }
  return total;
}

struct LossWeights {
  double mel = 15.0;
  double codebook = 1.0;
  double commitment = 0.25;
  std::vector<MelScale> mel_scales = default_mel_scales();
};

inline LossWeights loss_weights_from_json(const nlohmann::json& j) {
  LossWeights w;
  try {
    if (j.contains("mel")) j.at("mel").get_to(w.mel);
    if (j.contains("codebook")) j.at("codebook").get_to(w.codebook);
    if (j.contains("commitment")) j.at("commitment").get_to(w.commitment);
    if (j.contains("mel_scales")) {
      w.mel_scales.clear();
      for (const auto& s : j.at("mel_scales"))
        w.mel_scales.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(), s.at(2).get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("loss weights: ") + e.what());
  }
  return w;
}

/// A decoded estimate together with the quantizer losses of the features it was decoded from.
struct SourceEstimate {
  AudioBuffer audio;
  CodebookLosses vq;
};

/// One weighted reconstruction term: reference `reference` paired with estimate `estimate`
/// (reference == -1 marks the mixture term).
struct PairTerms {
  int reference = -1;
  int estimate = -1;
  double mel = 0.0;
  double codebook = 0.0;
  double commitment = 0.0;
};

struct LossBreakdown {
  double mel = 0.0;         // weighted, summed over pairs
  double codebook = 0.0;    // weighted
  double commitment = 0.0;  // weighted
  /// Adversarial and feature-matching terms need discriminators, which are not modeled.
  std::optional<double> adversarial;
  std::optional<double> feature_matching;
  double total = 0.0;
  Assignment assignment;
  std::vector<PairTerms> pairs;
};

/// Assignment by SI-SDR, then the weighted reconstruction terms evaluated once at that assignment,
/// plus the mixture term.
inline LossBreakdown sunac_loss(const SourceSet& references, const std::vector<SourceEstimate>& estimates,
                                const AudioBuffer& mix_ref, const SourceEstimate& mix_est,
                                const LossWeights& weights = {}) {
  if (mix_ref.size() != mix_est.audio.size()) throw ContractViolation("sunac_loss: mixture pair length mismatch");
  std::vector<AudioBuffer> est_audio;
  est_audio.reserve(estimates.size());
  for (const SourceEstimate& e : estimates) est_audio.push_back(e.audio);

  LossBreakdown out;
  out.assignment = best_assignment(references, est_audio);
  auto add_pair = [&](int ref, int est, const AudioBuffer& r, const SourceEstimate& e) {
    PairTerms p{ref, est, weights.mel * mel_loss(r, e.audio, weights.mel_scales), weights.codebook * e.vq.codebook,
                weights.commitment * e.vq.commitment};
    out.mel += p.mel;
    out.codebook += p.codebook;
    out.commitment += p.commitment;
    out.pairs.push_back(p);
  };
  for (std::size_t i = 0; i < references.size(); ++i) {
    const std::size_t j = out.assignment.permutation[i];
    add_pair(static_cast<int>(i), static_cast<int>(j), references.sources[i], estimates[j]);
  }
  add_pair(-1, -1, mix_ref, mix_est);
  out.total = out.mel + out.codebook + out.commitment;
  return out;
}

inline constexpr double kMaskEps = 1e-8;

/// Applies min(|STFT(estimate)| / (|STFT(mixture)| + eps), 1) to the mixture STFT and inverts.
inline AudioBuffer magnitude_mask_reconstruct(const AudioBuffer& mixture, const AudioBuffer& estimate,
                                              const StftConfig& cfg = {}) {
  if (mixture.size() != estimate.size()) throw ContractViolation("magnitude mask: length mismatch");
  ComplexSpectrogram mix = stft(mixture, cfg);
  const ComplexSpectrogram est = stft(estimate, cfg);
  for (std::size_t b = 0; b < mix.n_bins; ++b) {
    for (std::size_t f = 0; f < mix.n_frames; ++f) {
      const double mask = std::clamp(est.magnitude(b, f) / (mix.magnitude(b, f) + kMaskEps), 0.0, 1.0);
      mix.real(b, f) = static_cast<float>(mix.real(b, f) * mask);
      mix.imag(b, f) = static_cast<float>(mix.imag(b, f) * mask);
    }
  }
  return istft(mix, mixture.size(), mixture.sample_rate, cfg);
}

}  // namespace sunac
