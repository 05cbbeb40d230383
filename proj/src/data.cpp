// Copyright 2026 The ConcateNet Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "concatenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "concatenet/wav.hpp"

namespace concatenet::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double energy(const std::vector<double>& x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

void normalize_rms(std::vector<double>& x, double target_rms) {
  const double e = energy(x);
  if (!(e > 0.0)) return;
  const double g = target_rms / std::sqrt(e / static_cast<double>(x.size()));
  for (double& v : x) v *= g;
}

std::mt19937_64 item_rng(std::uint64_t seed, std::size_t index, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    stream};
  return std::mt19937_64(seq);
}

// RBJ band-pass biquad (0 dB peak gain).
class BandPass {
 public:
  BandPass(double center_hz, double q, double sample_rate) {
    const double w0 = kTwoPi * center_hz / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w0) / a0;
    a2_ = (1.0 - alpha) / a0;
  }
  double operator()(double x) {
    const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_, b2_, a1_, a2_;
  double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

double raised_cosine(double phase) {  // phase in [0, 1]
  const double s = std::sin(std::numbers::pi * phase);
  return s * s;
}

std::vector<double> synth_speech(std::mt19937_64& rng, std::size_t n, double sr) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  struct Syllable {
    std::size_t begin, end;
    double f1, f2, f3, level;
  };
  std::vector<Syllable> syllables;
  std::size_t pos = static_cast<std::size_t>(uniform(0.0, 0.1) * sr);
  while (pos < n) {
    const auto len = static_cast<std::size_t>(uniform(0.12, 0.3) * sr);
    syllables.push_back({pos, std::min(n, pos + len), uniform(300, 850), uniform(900, 2300),
                         uniform(2400, 3200), uniform(0.5, 1.0)});
    const double gap = u(rng) < 0.15 ? uniform(0.2, 0.5) : uniform(0.03, 0.15);
    pos += len + static_cast<std::size_t>(gap * sr);
  }

  const double base_f0 = uniform(90, 220);
  const double slow_rate = uniform(0.3, 1.0), slow_phase = uniform(0, kTwoPi);
  const double fast_rate = uniform(2.0, 4.0), fast_phase = uniform(0, kTwoPi);
  const double max_harmonic_hz = std::min(5000.0, 0.45 * sr);
  constexpr std::size_t kMaxHarmonics = 64;
  constexpr std::size_t kControlHop = 16;
  std::vector<double> phase(kMaxHarmonics, 0.0), amp(kMaxHarmonics, 0.0);
  for (auto& p : phase) p = uniform(0, kTwoPi);

  std::vector<double> out(n, 0.0);
  std::size_t syl = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f0 = std::clamp(base_f0 * (1.0 + 0.15 * std::sin(kTwoPi * slow_rate * t + slow_phase) +
                                            0.05 * std::sin(kTwoPi * fast_rate * t + fast_phase)),
                                 80.0, 300.0);
    while (syl < syllables.size() && syllables[syl].end <= i) ++syl;
    const bool voiced = syl < syllables.size() && syllables[syl].begin <= i;
    if (i % kControlHop == 0) {
      std::fill(amp.begin(), amp.end(), 0.0);
      if (voiced) {
        const auto& s = syllables[syl];
        for (std::size_t h = 1; h <= kMaxHarmonics; ++h) {
          const double f = static_cast<double>(h) * f0;
          if (f >= max_harmonic_hz) break;
          auto peak = [f](double fc, double bw) {
            const double x = (f - fc) / bw;
            return 1.0 / (1.0 + x * x);
          };
          const double envelope = peak(s.f1, 90) + 0.6 * peak(s.f2, 130) + 0.3 * peak(s.f3, 200) + 0.02;
          amp[h - 1] = envelope / (1.0 + f / 1000.0);
        }
      }
    }
    double v = 0.0;
    for (std::size_t h = 1; h <= kMaxHarmonics; ++h) {
      double& ph = phase[h - 1];
      ph += kTwoPi * static_cast<double>(h) * f0 / sr;
      if (ph > kTwoPi) ph -= kTwoPi * std::floor(ph / kTwoPi);
      if (amp[h - 1] != 0.0) v += amp[h - 1] * std::sin(ph);
    }
    if (voiced) {
      const auto& s = syllables[syl];
      const double frac = static_cast<double>(i - s.begin) / static_cast<double>(s.end - s.begin);
      out[i] = s.level * raised_cosine(frac) * v;
    }
  }
  normalize_rms(out, 0.1);
  return out;
}

std::vector<double> synth_background(std::mt19937_64& rng, std::size_t n, double sr) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  std::vector<double> out(n, 0.0);
  const double nyquist_guard = 0.45 * sr;

  // Low-level broadband bed.
  {
    BandPass bed(uniform(300, 2000), 0.4, sr);
    const double level = uniform(0.1, 0.3);
    for (double& v : out) v += level * bed(gauss(rng));
  }
  // Filtered noise bursts.
  const double duration = static_cast<double>(n) / sr;
  const auto bursts = static_cast<std::size_t>(std::ceil(duration * uniform(2.0, 5.0)));
  for (std::size_t b = 0; b < bursts; ++b) {
    const auto len = std::max<std::size_t>(16, static_cast<std::size_t>(uniform(0.1, 0.8) * sr));
    const auto start = static_cast<std::size_t>(u(rng) * static_cast<double>(n));
    BandPass bp(std::min(uniform(100, 8000), nyquist_guard), uniform(0.5, 3.0), sr);
    const double level = uniform(0.3, 1.0);
    for (std::size_t i = 0; i < len && start + i < n; ++i) {
      out[start + i] += level * raised_cosine(static_cast<double>(i) / static_cast<double>(len)) *
                        bp(gauss(rng));
    }
  }
  // Tonal interferers with slow amplitude modulation and on/off gating.
  const auto tones = 1 + static_cast<std::size_t>(u(rng) * 3.0);
  for (std::size_t k = 0; k < tones; ++k) {
    const double f = std::min(uniform(150, 4000), nyquist_guard);
    const double level = uniform(0.05, 0.2);
    const double am_rate = uniform(0.2, 2.0);
    const double on = uniform(0.0, 0.5) * duration;
    const double off = on + uniform(0.3, 1.0) * duration;
    const double ph0 = uniform(0, kTwoPi);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sr;
      if (t < on || t > off) continue;
      out[i] += level * (0.6 + 0.4 * std::sin(kTwoPi * am_rate * t)) * std::sin(kTwoPi * f * t + ph0);
    }
  }
  normalize_rms(out, 0.1);
  return out;
}

}  // namespace

MixResult mix_at_snr(const MixSpec& spec) {
  if (spec.speech.sample_rate != spec.background.sample_rate) {
    throw std::invalid_argument("speech and background sample rates differ (" +
                                std::to_string(spec.speech.sample_rate) + " vs " +
                                std::to_string(spec.background.sample_rate) + ")");
  }
  if (!std::isfinite(spec.snr_db)) throw std::invalid_argument("target SNR must be finite");
  const std::size_t n = std::min(spec.speech.size(), spec.background.size());
  MixResult r;
  r.speech = {std::vector<double>(spec.speech.samples.begin(),
                                  spec.speech.samples.begin() + static_cast<std::ptrdiff_t>(n)),
              spec.speech.sample_rate};
  r.background = {std::vector<double>(spec.background.samples.begin(),
                                      spec.background.samples.begin() + static_cast<std::ptrdiff_t>(n)),
                  spec.background.sample_rate};
  const double es = energy(r.speech.samples), ev = energy(r.background.samples);
  if (!(es > 0.0) || !(ev > 0.0)) {
    throw std::invalid_argument("mix_at_snr: speech and background must have nonzero energy");
  }
  r.gain = std::sqrt(es / ev * std::pow(10.0, -spec.snr_db / 10.0));
  r.mixture = {std::vector<double>(n), spec.speech.sample_rate};
  for (std::size_t i = 0; i < n; ++i) {
    r.background.samples[i] *= r.gain;
    r.mixture.samples[i] = r.speech.samples[i] + r.background.samples[i];
  }
  if (spec.awgn_snr_db) {
    std::mt19937_64 rng(spec.noise_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    r.noise = {std::vector<double>(n), spec.speech.sample_rate};
    for (double& v : r.noise.samples) v = gauss(rng);
    const double target = energy(r.mixture.samples) * std::pow(10.0, -*spec.awgn_snr_db / 10.0);
    const double g = std::sqrt(target / energy(r.noise.samples));
    for (std::size_t i = 0; i < n; ++i) {
      r.noise.samples[i] *= g;
      r.mixture.samples[i] += r.noise.samples[i];
    }
  }
  return r;
}

MixSpec test_mixture_recipe(Waveform speech, Waveform background, double snr_db,
                            std::uint64_t noise_seed) {
  return {std::move(speech), std::move(background), snr_db, 20.0, noise_seed};
}

CorpusItem synth_item(std::uint64_t seed, std::size_t index, double duration_s, double sample_rate) {
  if (!(duration_s >= 0.25)) throw std::invalid_argument("corpus items must be at least 0.25 s long");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  auto speech_rng = item_rng(seed, index, 1);
  auto background_rng = item_rng(seed, index, 2);
  std::ostringstream id;
  id << "item" << std::setw(4) << std::setfill('0') << index;
  return {id.str(), {synth_speech(speech_rng, n, sample_rate), sample_rate},
          {synth_background(background_rng, n, sample_rate), sample_rate}};
}

std::vector<CorpusItem> synth_corpus(std::uint64_t seed, std::size_t n_items, double duration_s,
                                     double sample_rate) {
  std::vector<CorpusItem> items;
  items.reserve(n_items);
  for (std::size_t i = 0; i < n_items; ++i) items.push_back(synth_item(seed, i, duration_s, sample_rate));
  return items;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).string();
  };
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 4) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 4 tab-separated fields");
    }
    ManifestEntry e{fields[0], resolve(fields[1]), resolve(fields[2]), 0.0};
    try {
      std::size_t used = 0;
      e.snr_db = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad SNR '" + fields[3] + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path);
  out << std::setprecision(17);
  for (const auto& e : entries) {
    out << e.id << '\t' << e.speech_path << '\t' << e.background_path << '\t' << e.snr_db << '\n';
  }
}

std::vector<ManifestEntry> export_corpus(const std::string& dir, const std::vector<CorpusItem>& items,
                                         const std::vector<double>& snrs_db) {
  if (snrs_db.size() != items.size()) {
    throw std::invalid_argument("export_corpus: one SNR per item required");
  }
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const std::string s = item.id + "_speech.wav", v = item.id + "_background.wav";
    write_wav((std::filesystem::path(dir) / s).string(), item.speech);
    write_wav((std::filesystem::path(dir) / v).string(), item.background);
    entries.push_back({item.id, s, v, snrs_db[i]});
  }
  write_manifest((std::filesystem::path(dir) / "manifest.tsv").string(), entries);
  return entries;
}

}  // namespace concatenet::data
