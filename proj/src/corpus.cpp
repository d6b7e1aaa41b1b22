#include "v2v/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "v2v/io.hpp"

namespace v2v {

namespace {

constexpr int kWavRates[] = {8000, 16000, 48000};

bool rate_supported(long rate) {
    return std::find(std::begin(kWavRates), std::end(kWavRates), rate) != std::end(kWavRates);
}

constexpr std::uint64_t kCleanSalt = 0xC1EA4C1EA4C1EA41ULL;
constexpr std::uint64_t kNoiseSalt = 0x4015E4015E4015E4ULL;

constexpr char kShardMagic[4] = {'V', '2', 'V', 'F'};
constexpr char kStatsMagic[4] = {'V', '2', 'V', 'S'};
constexpr char kGvMagic[4] = {'V', '2', 'V', 'G'};
constexpr std::uint32_t kShardVersion = 1;
constexpr std::uint32_t kStatsVersion = 1;
constexpr std::uint32_t kGvVersion = 1;

// Per-sample activity mask: non-overlapping 10 ms frames whose energy
// exceeds 1/100 of the mean frame energy. The tail short of a full frame
// is left inactive. mix_at_snr and measure_snr_db share this rule.
std::vector<bool> active_mask(const Waveform& w) {
    const std::size_t frame = std::max<std::size_t>(static_cast<std::size_t>(w.sample_rate) / 100, 1);
    const std::size_t full = w.samples.size() / frame;
    std::vector<bool> mask(w.samples.size(), false);
    if (full == 0) return mask;

    Vector energy(full, 0.0);
    double total = 0.0;
    for (std::size_t f = 0; f < full; ++f) {
        double e = 0.0;
        for (std::size_t i = f * frame; i < (f + 1) * frame; ++i)
            e += w.samples[i] * w.samples[i];
        energy[f] = e;
        total += e;
    }
    const double threshold = total / static_cast<double>(full) / 100.0;
    for (std::size_t f = 0; f < full; ++f)
        if (energy[f] > threshold)
            std::fill(mask.begin() + static_cast<std::ptrdiff_t>(f * frame),
                      mask.begin() + static_cast<std::ptrdiff_t>((f + 1) * frame), true);
    return mask;
}

Vector tile_to(const Vector& src, std::size_t n) {
    Vector out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = src[i % src.size()];
    return out;
}

void scale_to_rms(Vector& v, double rms) {
    double p = 0.0;
    for (double x : v) p += x * x;
    p = std::sqrt(p / static_cast<double>(v.size()));
    require(p > 0.0, "cannot rescale a silent signal");
    const double s = rms / p;
    for (double& x : v) x *= s;
}

} // namespace

Waveform read_wav(const std::string& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic("RIFF", "wav container");
    r.u32(); // container size, not trusted
    {
        const std::size_t at = r.offset();
        if (r.bytes(4, "wav form type") != "WAVE")
            throw ParseError("not a WAVE file", at);
    }

    bool have_fmt = false;
    long sample_rate = 0;
    Waveform w;
    bool have_data = false;

    while (r.remaining() > 0) {
        if (r.remaining() < 8) throw ParseError("truncated chunk header", r.offset());
        const std::string id = r.bytes(4, "chunk id");
        const std::uint32_t size = r.u32();
        const std::size_t body_at = r.offset();

        if (id == "fmt ") {
            if (size < 16) throw ParseError("fmt chunk too small", body_at);
            const std::uint16_t format = r.u16();
            const std::uint16_t channels = r.u16();
            sample_rate = static_cast<long>(r.u32());
            r.u32(); // byte rate
            r.u16(); // block align
            const std::uint16_t bits = r.u16();
            r.skip(size - 16, "fmt extension");
            if (format == 3)
                throw UnsupportedFormatError("float wav data is not supported (PCM16 only)");
            if (format != 1)
                throw UnsupportedFormatError("unsupported wav format code " +
                                             std::to_string(format));
            if (channels != 1)
                throw UnsupportedFormatError("only mono wav is supported, got " +
                                             std::to_string(channels) + " channels");
            if (bits != 16)
                throw UnsupportedFormatError("only 16-bit PCM is supported, got " +
                                             std::to_string(bits) + " bits");
            if (!rate_supported(sample_rate))
                throw UnsupportedFormatError("unsupported sample rate " +
                                             std::to_string(sample_rate));
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw ParseError("data chunk before fmt chunk", body_at - 8);
            if (size == 0) throw ParseError("empty data chunk", body_at - 8);
            if (size % 2 != 0) throw ParseError("odd data chunk size for PCM16", body_at - 4);
            const std::size_t n = size / 2;
            w.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i)
                w.samples[i] = static_cast<double>(r.i16()) / 32768.0;
            have_data = true;
        } else {
            r.skip(size, "chunk body");
        }
        if (size % 2 == 1 && r.remaining() > 0) r.skip(1, "chunk padding");
    }

    if (!have_fmt) throw ParseError("missing fmt chunk", bytes.size());
    if (!have_data) throw ParseError("missing data chunk", bytes.size());
    w.sample_rate = static_cast<int>(sample_rate);
    return w;
}

void write_wav(const std::string& path, const Waveform& w) {
    require(!w.samples.empty(), "cannot write an empty waveform");
    require(rate_supported(w.sample_rate), "unsupported sample rate for wav output");
    for (double x : w.samples)
        require(std::isfinite(x) && std::abs(x) <= 1.0, "wav samples must lie in [-1, 1]");

    ByteWriter out;
    const std::uint32_t data_size = static_cast<std::uint32_t>(2 * w.samples.size());
    out.put_magic("RIFF");
    out.put_u32(36 + data_size);
    out.put_magic("WAVE");
    out.put_magic("fmt ");
    out.put_u32(16);
    out.put_u16(1); // PCM
    out.put_u16(1); // mono
    out.put_u32(static_cast<std::uint32_t>(w.sample_rate));
    out.put_u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
    out.put_u16(2);
    out.put_u16(16);
    out.put_magic("data");
    out.put_u32(data_size);
    for (double x : w.samples) {
        long q = std::lround(x * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        out.put_i16(static_cast<std::int16_t>(q));
    }
    atomic_write_file(path, out.bytes());
}

Waveform synth_clean(double duration_s, int sample_rate, std::uint64_t seed) {
    require(duration_s >= 0.5, "utterance duration must be at least 0.5 s");
    require(sample_rate > 0, "sample rate must be positive");

    SeededRng rng(seed);
    const std::size_t n = static_cast<std::size_t>(duration_s * sample_rate);
    // The fundamental wanders a few percent over the utterance, the way a
    // held vowel does. That keeps each spectral line sweeping through its
    // neighboring bins instead of parking on one.
    const double f0 = 105.0 + 185.0 * rng.next_unit();
    const double drift_amp = 0.015 + 0.015 * rng.next_unit();
    const double drift_rate = 0.25 + 0.35 * rng.next_unit();
    const double drift_phase = 2.0 * std::numbers::pi * rng.next_unit();
    const std::size_t n_harm = 3 + static_cast<std::size_t>(rng.next_unit() * 4.0);
    const double freq_cap = std::min(1800.0, 0.45 * sample_rate);

    struct Harmonic {
        double order, amp, phase;
    };
    std::vector<Harmonic> harmonics;
    for (std::size_t k = 1; k <= n_harm; ++k) {
        // decay like 1/sqrt(k): gentler than a sawtooth's 1/k, so the upper
        // harmonics keep enough level to matter in the mix
        const double amp = (0.5 + 0.5 * rng.next_unit()) / std::sqrt(static_cast<double>(k));
        const double phase = 2.0 * std::numbers::pi * rng.next_unit();
        const double top = f0 * static_cast<double>(k) * (1.0 + drift_amp);
        if (top <= freq_cap) harmonics.push_back({static_cast<double>(k), amp, phase});
    }

    const double am_freq = 2.0 + 3.0 * rng.next_unit();
    const double am_depth = 0.5 + 0.3 * rng.next_unit();
    const double am_phase = 2.0 * std::numbers::pi * rng.next_unit();

    // Voice/silence segmentation with 10 ms raised-cosine edges. Segment
    // and gap lengths are in seconds, so a longer utterance holds more
    // voiced stretches rather than stretched-out ones.
    struct Segment {
        double begin, end;
    };
    std::vector<Segment> voiced;
    double t = 0.06 + 0.06 * rng.next_unit();
    while (t < duration_s) {
        const double v = 0.20 + 0.15 * rng.next_unit();
        voiced.push_back({t, std::min(t + v, duration_s)});
        t += v + 0.05 + 0.10 * rng.next_unit();
    }
    const double ramp = 0.010;
    auto gate = [&](double time) {
        double g = 0.0;
        for (const Segment& s : voiced) {
            if (time < s.begin || time > s.end) continue;
            const double edge = std::min(time - s.begin, s.end - time);
            const double x = std::min(edge / ramp, 1.0);
            g = std::max(g, 0.5 - 0.5 * std::cos(std::numbers::pi * x));
        }
        return g;
    };

    // Breath noise under the voicing gate, short fricative-like bursts
    // hugging segment edges, and a faint room tone through the gaps. A bare
    // harmonic stack over digital silence leaves most cells at the log
    // floor, which no recorded voice does; these give the whole band
    // something real to carry. Levels sit well under the harmonics so the
    // sub-2 kHz energy share stays where it was. Breath strength rides the
    // voicing effort and nothing else: squaring the loudness curve keeps the
    // hiss glued to the audible envelope, the way aspiration tracks airflow.
    // It stays quiet enough that the hiss bands are about the envelope
    // shape, not the level.
    const double asp_rel = 0.04 + 0.02 * rng.next_unit();
    const double room_rel = 0.010 + 0.006 * rng.next_unit();
    struct Burst {
        double begin, end, amp;
    };
    std::vector<Burst> bursts;
    for (const Segment& s : voiced) {
        const double onset_draw = rng.next_unit();
        const double onset_len = 0.035 + 0.050 * rng.next_unit();
        const double onset_amp = 0.18 + 0.20 * rng.next_unit();
        const double tail_draw = rng.next_unit();
        const double tail_len = 0.035 + 0.050 * rng.next_unit();
        const double tail_amp = 0.18 + 0.20 * rng.next_unit();
        // occasional mid-vowel click, like a tongue tap
        const double pop_draw = rng.next_unit();
        const double pop_pos = 0.15 + 0.60 * rng.next_unit();
        const double pop_len = 0.015 + 0.020 * rng.next_unit();
        const double pop_amp = 0.12 + 0.14 * rng.next_unit();
        // keep the opening burst clear of sample zero; the lead-in stays silent
        const double floor_t = voiced.front().begin * 0.5;
        if (onset_draw < 0.8)
            bursts.push_back({std::max(s.begin - onset_len, floor_t), s.begin, onset_amp});
        if (tail_draw < 0.6) bursts.push_back({s.end, s.end + tail_len, tail_amp});
        if (pop_draw < 0.35) {
            const double at = s.begin + pop_pos * (s.end - s.begin);
            bursts.push_back({at, std::min(at + pop_len, s.end), pop_amp});
        }
    }
    auto burst_gain = [&](double time) {
        double g = 0.0;
        for (const Burst& b : bursts) {
            if (time < b.begin || time > b.end) continue;
            const double edge = std::min(time - b.begin, b.end - time);
            const double x = std::min(edge / 0.005, 1.0);
            g = std::max(g, b.amp * (0.5 - 0.5 * std::cos(std::numbers::pi * x)));
        }
        return g;
    };

    // Shimmer: each partial sags hard every second or two for 40-100 ms,
    // independently of the others. One line flickering out of several
    // barely moves the overall level, but the line's own bins dive.
    struct Dip {
        double begin, end, depth;
    };
    std::vector<std::vector<Dip>> dips(harmonics.size());
    for (std::size_t h = 0; h < harmonics.size(); ++h) {
        double td = 0.2 + 1.6 * rng.next_unit();
        while (td < duration_s) {
            const double len = 0.03 + 0.05 * rng.next_unit();
            const double depth = 0.85 + 0.10 * rng.next_unit();
            dips[h].push_back({td, td + len, depth});
            td += len + 1.2 + 2.0 * rng.next_unit();
        }
    }
    auto dip_gain = [&](std::size_t h, double time) {
        for (const Dip& d : dips[h]) {
            if (time < d.begin || time > d.end) continue;
            const double edge = std::min(time - d.begin, d.end - time);
            const double x = std::min(edge / 0.008, 1.0);
            return 1.0 - d.depth * (0.5 - 0.5 * std::cos(std::numbers::pi * x));
        }
        return 1.0;
    };

    // A faint sub-100 Hz rumble rides under everything, its level lurching
    // across a huge range every few tens of milliseconds like footfall and
    // chair noise through a floor. It sits far below the voice, so it never
    // colors the mix, but the bottom few bins of the spectrum live their own
    // erratic life down there.
    const double rum_rel = 0.04 + 0.03 * rng.next_unit();
    struct RumbleStep {
        double until, level;
    };
    std::vector<RumbleStep> rumble_steps;
    {
        double tr = 0.0;
        while (tr < duration_s) {
            tr += 0.03 + 0.05 * rng.next_unit();
            rumble_steps.push_back({tr, std::exp(2.4 * (2.0 * rng.next_unit() - 1.0))});
        }
    }
    std::size_t rumble_at = 0;

    double amp_sum = 0.0;
    for (const Harmonic& h : harmonics) amp_sum += h.amp;

    // one-pole colors: breath and room tone stay low, bursts occupy
    // roughly 1.4-3.4 kHz, the rumble hugs the bottom few bins
    const double lp_a = std::exp(-2.0 * std::numbers::pi * 1200.0 / sample_rate);
    const double room_a = std::exp(-2.0 * std::numbers::pi * 800.0 / sample_rate);
    const double bp_lp_a = std::exp(-2.0 * std::numbers::pi * 3400.0 / sample_rate);
    const double bp_hp_a = std::exp(-2.0 * std::numbers::pi * 1400.0 / sample_rate);
    const double rum_a = std::exp(-2.0 * std::numbers::pi * 50.0 / sample_rate);
    double lp = 0.0, room = 0.0, band = 0.0, band_hp = 0.0, band_prev = 0.0;
    double rum1 = 0.0, rum2 = 0.0;

    std::vector<double> phase(harmonics.size());
    for (std::size_t h = 0; h < harmonics.size(); ++h) phase[h] = harmonics[h].phase;

    // Each partial carries its own frequency wobble: an Ornstein-Uhlenbeck
    // walk a dozen hertz wide with a ~60 ms memory. The peaks slosh between
    // neighboring analysis bins while each third-octave band's total barely
    // moves, the way a rough voice smears line spectra without changing its
    // overall shape.
    std::vector<double> wob(harmonics.size(), 0.0);
    const double wob_a = std::exp(-1.0 / (0.06 * sample_rate));
    const double wob_amp = 9.0 + 6.0 * rng.next_unit();
    const double wob_sigma = wob_amp * std::sqrt(3.0 * (1.0 - wob_a * wob_a));

    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double time = static_cast<double>(i) / sample_rate;
        const double u = 2.0 * rng.next_unit() - 1.0;
        const double u2 = 2.0 * rng.next_unit() - 1.0;
        const double u3 = 2.0 * rng.next_unit() - 1.0;
        lp = lp_a * lp + (1.0 - lp_a) * u;
        room = room_a * room + (1.0 - room_a) * u2;
        band = bp_lp_a * band + (1.0 - bp_lp_a) * u;
        band_hp = bp_hp_a * (band_hp + band - band_prev);
        band_prev = band;
        rum1 = rum_a * rum1 + (1.0 - rum_a) * u3;
        rum2 = rum_a * rum2 + (1.0 - rum_a) * rum1;
        while (rumble_at + 1 < rumble_steps.size() && time >= rumble_steps[rumble_at].until)
            ++rumble_at;

        const double f0_now =
            f0 * (1.0 + drift_amp *
                            std::sin(2.0 * std::numbers::pi * drift_rate * time + drift_phase));
        const double dphi = 2.0 * std::numbers::pi * f0_now / sample_rate;
        double s = 0.0;
        for (std::size_t h = 0; h < harmonics.size(); ++h) {
            wob[h] = wob_a * wob[h] + wob_sigma * (2.0 * rng.next_unit() - 1.0);
            phase[h] += dphi * harmonics[h].order +
                        2.0 * std::numbers::pi * wob[h] / sample_rate;
            s += harmonics[h].amp * dip_gain(h, time) * std::sin(phase[h]);
        }
        const double am01 =
            0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * am_freq * time + am_phase);
        const double asp_env = (0.08 + 0.92 * am01) * (0.08 + 0.92 * am01);
        s *= 1.0 + am_depth * (2.0 * am01 - 1.0);
        s += asp_rel * amp_sum * lp * asp_env;
        s *= gate(time);
        s += burst_gain(time) * amp_sum * band_hp;
        s += room_rel * amp_sum * room;
        s += rum_rel * amp_sum * 1.6 * rum2 * rumble_steps[rumble_at].level;
        w.samples[i] = s;
        peak = std::max(peak, std::abs(s));
    }
    require(peak > 0.0, "synthesized utterance is silent");
    const double scale = 0.5 / peak;
    for (double& x : w.samples) x *= scale;
    return w;
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "white") return NoiseKind::White;
    if (s == "pink") return NoiseKind::Pink;
    if (s == "babble") return NoiseKind::FilteredBabble;
    if (s == "file") return NoiseKind::File;
    throw ContractError("unknown noise kind: " + s);
}

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::White: return "white";
        case NoiseKind::Pink: return "pink";
        case NoiseKind::FilteredBabble: return "babble";
        case NoiseKind::File: return "file";
    }
    throw ContractError("invalid noise kind value");
}

void CorpusManifest::validate() const {
    require(!rows.empty(), "manifest must have at least one row");
    std::set<std::string> ids;
    for (const ManifestRow& r : rows) {
        require(!r.id.empty(), "utterance id must be nonempty");
        require(std::isfinite(r.mix.snr_db), "snr must be finite");
        require(ids.insert(r.id).second, "duplicate utterance id: " + r.id);
        if (r.mix.noise_kind == NoiseKind::File)
            require(!r.mix.noise_path.empty(), "file noise needs a path");
    }
}

Waveform make_noise(const MixSpec& spec, std::size_t n, int sample_rate) {
    require(n > 0, "noise length must be positive");
    Waveform w;
    w.sample_rate = sample_rate;

    switch (spec.noise_kind) {
        case NoiseKind::White: {
            SeededRng rng(spec.seed ^ kNoiseSalt);
            w.samples = sample_standard_normal(rng, n);
            scale_to_rms(w.samples, 0.1);
            break;
        }
        case NoiseKind::Pink: {
            SeededRng rng(spec.seed ^ kNoiseSalt);
            const Vector white = sample_standard_normal(rng, n);
            w.samples.resize(n);
            double b0 = 0.0, b1 = 0.0, b2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double x = white[i];
                b0 = 0.99765 * b0 + x * 0.0990460;
                b1 = 0.96300 * b1 + x * 0.2965164;
                b2 = 0.57000 * b2 + x * 1.0526913;
                w.samples[i] = b0 + b1 + b2 + x * 0.1848;
            }
            scale_to_rms(w.samples, 0.1);
            break;
        }
        case NoiseKind::FilteredBabble: {
            const double dur = std::max(static_cast<double>(n) / sample_rate, 0.5);
            SeededRng rng(spec.seed ^ kNoiseSalt);
            w.samples.assign(n, 0.0);
            for (int talker = 0; talker < 8; ++talker) {
                const Waveform v = synth_clean(dur + 0.1, sample_rate, rng.next_u64());
                const double level = std::exp(0.5 * (2.0 * rng.next_unit() - 1.0));
                for (std::size_t i = 0; i < n; ++i)
                    w.samples[i] += level * v.samples[i % v.samples.size()];
            }
            // the table talks in waves: several times a second the whole
            // crowd leans a few dB louder or softer together, so the babble
            // floor wanders instead of sitting at one steady level. The
            // swings stay shallow on purpose: a deep trough would hand the
            // listener a clean glimpse of the target, and glimpses make the
            // unprocessed mix score better, not worse.
            std::vector<double> swell_t{0.0};
            std::vector<double> swell_v{std::exp(0.5 * (2.0 * rng.next_unit() - 1.0))};
            while (swell_t.back() < dur) {
                swell_t.push_back(swell_t.back() + 0.10 + 0.18 * rng.next_unit());
                swell_v.push_back(std::exp(0.5 * (2.0 * rng.next_unit() - 1.0)));
            }
            std::size_t seg = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double t = static_cast<double>(i) / sample_rate;
                while (seg + 1 < swell_t.size() && t >= swell_t[seg + 1]) ++seg;
                const double span = swell_t[seg + 1] - swell_t[seg];
                const double x = std::clamp((t - swell_t[seg]) / span, 0.0, 1.0);
                const double mix = 0.5 - 0.5 * std::cos(std::numbers::pi * x);
                w.samples[i] *= (1.0 - mix) * swell_v[seg] + mix * swell_v[seg + 1];
            }
            scale_to_rms(w.samples, 0.1);
            break;
        }
        case NoiseKind::File: {
            const Waveform src = read_wav(spec.noise_path);
            require(src.sample_rate == sample_rate,
                    "noise file sample rate must match the corpus rate");
            w.samples = tile_to(src.samples, n);
            break;
        }
    }
    return w;
}

Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
    require(!clean.samples.empty(), "clean signal must be nonempty");
    require(clean.sample_rate == noise.sample_rate, "sample rates must match");
    require(std::isfinite(snr_db), "snr must be finite");
    require(!noise.samples.empty(), "noise signal must be nonempty");

    const Vector noise_samples = noise.samples.size() >= clean.samples.size()
                                     ? Vector(noise.samples.begin(),
                                              noise.samples.begin() +
                                                  static_cast<std::ptrdiff_t>(clean.samples.size()))
                                     : tile_to(noise.samples, clean.samples.size());

    const std::vector<bool> mask = active_mask(clean);
    double p_clean = 0.0, p_noise = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        if (!mask[i]) continue;
        p_clean += clean.samples[i] * clean.samples[i];
        p_noise += noise_samples[i] * noise_samples[i];
        ++count;
    }
    require(count > 0 && p_clean > 0.0, "clean signal is silent; cannot set an snr");
    require(p_noise > 0.0, "noise is silent over the active region");

    const double scale = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
    Waveform out;
    out.sample_rate = clean.sample_rate;
    out.samples.resize(clean.samples.size());
    for (std::size_t i = 0; i < clean.samples.size(); ++i)
        out.samples[i] = clean.samples[i] + scale * noise_samples[i];
    return out;
}

double measure_snr_db(const Waveform& clean, const Waveform& noise_component) {
    require(clean.samples.size() == noise_component.samples.size(), "lengths must match");
    const std::vector<bool> mask = active_mask(clean);
    double p_clean = 0.0, p_noise = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        if (!mask[i]) continue;
        p_clean += clean.samples[i] * clean.samples[i];
        p_noise += noise_component.samples[i] * noise_component.samples[i];
        ++count;
    }
    require(count > 0 && p_clean > 0.0 && p_noise > 0.0,
            "need active, non-silent signals to measure an snr");
    return 10.0 * std::log10(p_clean / p_noise);
}

UtterancePair realize_utterance(const ManifestRow& row, int sample_rate,
                                double base_duration_s, const std::string& corpus_dir) {
    SeededRng base(row.mix.seed);
    const double duration = base_duration_s * (0.9 + 0.4 * base.next_unit());

    UtterancePair pair;
    bool from_file = false;
    if (!corpus_dir.empty()) {
        const std::string path = corpus_dir + "/clean/" + row.id + ".wav";
        if (std::filesystem::exists(path)) {
            pair.clean = read_wav(path);
            require(pair.clean.sample_rate == sample_rate,
                    "clean file sample rate must match the profile rate");
            from_file = true;
        }
    }
    if (!from_file)
        pair.clean = synth_clean(duration, sample_rate, row.mix.seed ^ kCleanSalt);

    const Waveform noise = make_noise(row.mix, pair.clean.samples.size(), sample_rate);
    pair.noisy = mix_at_snr(pair.clean, noise, row.mix.snr_db);

    double peak = 0.0;
    for (double x : pair.noisy.samples) peak = std::max(peak, std::abs(x));
    for (double x : pair.clean.samples) peak = std::max(peak, std::abs(x));
    if (peak > 0.999) {
        const double s = 0.999 / peak;
        for (double& x : pair.noisy.samples) x *= s;
        for (double& x : pair.clean.samples) x *= s;
    }
    return pair;
}

namespace {

double parse_double_field(const std::string& text, std::size_t begin, std::size_t end) {
    double v = 0.0;
    auto res = std::from_chars(text.data() + begin, text.data() + end, v);
    if (res.ec != std::errc() || res.ptr != text.data() + end)
        throw ParseError("malformed numeric field", begin);
    return v;
}

std::uint64_t parse_u64_field(const std::string& text, std::size_t begin, std::size_t end) {
    std::uint64_t v = 0;
    auto res = std::from_chars(text.data() + begin, text.data() + end, v);
    if (res.ec != std::errc() || res.ptr != text.data() + end)
        throw ParseError("malformed seed field", begin);
    return v;
}

} // namespace

CorpusManifest parse_manifest(const std::string& text) {
    CorpusManifest m;
    std::size_t line_start = 0;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        std::size_t effective_end = line_end;
        if (effective_end > line_start && text[effective_end - 1] == '\r') --effective_end;

        if (effective_end > line_start && text[line_start] != '#') {
            std::vector<std::pair<std::size_t, std::size_t>> fields;
            std::size_t field_start = line_start;
            for (std::size_t i = line_start; i <= effective_end; ++i) {
                if (i == effective_end || text[i] == '\t') {
                    fields.emplace_back(field_start, i);
                    field_start = i + 1;
                }
            }
            if (fields.size() != 4)
                throw ParseError("manifest row must have 4 tab-separated fields", line_start);

            ManifestRow row;
            row.id = text.substr(fields[0].first, fields[0].second - fields[0].first);
            if (row.id.empty()) throw ParseError("empty utterance id", fields[0].first);

            const std::string kind =
                text.substr(fields[1].first, fields[1].second - fields[1].first);
            if (kind.rfind("file:", 0) == 0) {
                row.mix.noise_kind = NoiseKind::File;
                row.mix.noise_path = kind.substr(5);
                if (row.mix.noise_path.empty())
                    throw ParseError("file noise needs a path after 'file:'", fields[1].first);
            } else {
                try {
                    row.mix.noise_kind = noise_kind_from_string(kind);
                } catch (const ContractError&) {
                    throw ParseError("unknown noise kind: " + kind, fields[1].first);
                }
                if (row.mix.noise_kind == NoiseKind::File)
                    throw ParseError("file noise needs a 'file:<path>' token", fields[1].first);
            }
            row.mix.snr_db = parse_double_field(text, fields[2].first, fields[2].second);
            row.mix.seed = parse_u64_field(text, fields[3].first, fields[3].second);
            m.rows.push_back(std::move(row));
        }
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
    m.validate();
    return m;
}

std::string manifest_text(const CorpusManifest& m) {
    m.validate();
    std::string out;
    for (const ManifestRow& r : m.rows) {
        out += r.id;
        out += '\t';
        out += r.mix.noise_kind == NoiseKind::File ? "file:" + r.mix.noise_path
                                                   : to_string(r.mix.noise_kind);
        out += '\t';
        out += format_double(r.mix.snr_db);
        out += '\t';
        out += std::to_string(r.mix.seed);
        out += '\n';
    }
    return out;
}

CorpusManifest load_manifest(const std::string& path) {
    return parse_manifest(read_file(path));
}

void FeatureShard::validate() const {
    require(rows >= 1, "shard must have at least one row");
    require(d_in >= 1 && d_out >= 1, "shard dims must be positive");
    require(inputs.size() == rows * d_in, "input buffer size mismatch");
    require(targets.size() == rows * d_out, "target buffer size mismatch");
    for (float v : inputs) require(std::isfinite(v), "shard inputs must be finite");
    for (float v : targets) require(std::isfinite(v), "shard targets must be finite");
}

DatasetBundle build_dataset(const CorpusManifest& manifest, const DatasetOptions& opts) {
    manifest.validate();
    opts.stft.validate();
    require(opts.context >= 1 && opts.context % 2 == 1, "context width must be odd");
    require(opts.nat_lead >= 1, "nat lead frames must be at least 1");
    require((opts.input_stats == nullptr) == (opts.target_stats == nullptr),
            "reuse either both stats or neither");

    std::vector<LpsSequence> noisy_lps(manifest.rows.size());
    std::vector<LpsSequence> clean_lps(manifest.rows.size());
    for (std::size_t u = 0; u < manifest.rows.size(); ++u) {
        const ManifestRow& row = manifest.rows[u];
        try {
            const UtterancePair pair = realize_utterance(row, opts.stft.sample_rate,
                                                         opts.base_duration_s, opts.corpus_dir);
            noisy_lps[u] = lps(stft(pair.noisy, opts.stft));
            clean_lps[u] = lps(stft(pair.clean, opts.stft));
        } catch (const Error& e) {
            throw Error("utterance '" + row.id + "': " + e.what());
        }
    }

    DatasetBundle out;
    out.input_stats = opts.input_stats ? *opts.input_stats : fit_norm(noisy_lps);
    out.target_stats = opts.target_stats ? *opts.target_stats : fit_norm(clean_lps);

    const std::size_t bins = opts.stft.bins();
    const std::size_t d_in = opts.context * bins + (opts.nat ? bins : 0);
    const std::size_t d_out = bins;

    FeatureShard& shard = out.shard;
    shard.d_in = d_in;
    shard.d_out = d_out;
    for (std::size_t u = 0; u < manifest.rows.size(); ++u) {
        const LpsSequence norm_in =
            opts.norm == NormMode::PerUtterance
                ? apply_norm(noisy_lps[u], fit_norm({noisy_lps[u]}))
                : apply_norm(noisy_lps[u], out.input_stats);
        const LpsSequence norm_tgt = apply_norm(clean_lps[u], out.target_stats);
        const std::vector<Vector> contexts = make_context(norm_in, opts.context);

        Vector nat;
        if (opts.nat)
            nat = nat_estimate(norm_in, std::min(opts.nat_lead, norm_in.frames));

        for (std::size_t t = 0; t < norm_in.frames; ++t) {
            for (double v : contexts[t]) shard.inputs.push_back(static_cast<float>(v));
            for (double v : nat) shard.inputs.push_back(static_cast<float>(v));
            for (std::size_t k = 0; k < bins; ++k)
                shard.targets.push_back(static_cast<float>(norm_tgt.at(t, k)));
            ++shard.rows;
        }
    }

    ByteWriter prov;
    prov.put_magic("prov");
    std::string header;
    header += "sr=" + std::to_string(opts.stft.sample_rate) + "\n";
    header += "fft=" + std::to_string(opts.stft.fft_size) + "\n";
    header += "context=" + std::to_string(opts.context) + "\n";
    header += "nat=" + std::string(opts.nat ? "on" : "off") + "\n";
    header += "nat_lead=" + std::to_string(opts.nat_lead) + "\n";
    header += "norm=" + std::string(opts.norm == NormMode::Global ? "global" : "per_utt") + "\n";
    header += "dur=" + format_double(opts.base_duration_s) + "\n";
    header += "stats=" + std::string(opts.input_stats ? "reused" : "fitted") + "\n";
    prov.put_bytes(header.data(), header.size());
    const std::string rows_text = manifest_text(manifest);
    prov.put_bytes(rows_text.data(), rows_text.size());
    shard.provenance = digest256(prov.bytes());

    shard.validate();
    out.gv.reference_std = out.target_stats.std;
    out.gv.produced_std = out.target_stats.std;
    out.gv.validate();
    return out;
}

void save_shard(const std::string& path, const FeatureShard& s) {
    s.validate();
    ByteWriter w;
    w.put_magic(kShardMagic);
    w.put_u32(kShardVersion);
    w.put_u32(static_cast<std::uint32_t>(s.rows));
    w.put_u32(static_cast<std::uint32_t>(s.d_in));
    w.put_u32(static_cast<std::uint32_t>(s.d_out));
    w.put_bytes(s.provenance.data(), s.provenance.size());
    for (float v : s.inputs) w.put_f32(v);
    for (float v : s.targets) w.put_f32(v);
    atomic_write_file(path, w.bytes());
}

FeatureShard load_shard(const std::string& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kShardMagic, "shard header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kShardVersion)
        throw ParseError("unsupported shard version " + std::to_string(version), version_at);

    FeatureShard s;
    s.rows = r.u32();
    s.d_in = r.u32();
    s.d_out = r.u32();
    if (s.rows == 0) throw ParseError("shard has no rows", r.offset() - 12);
    if (s.d_in == 0 || s.d_out == 0) throw ParseError("zero shard dimension", r.offset() - 8);

    const std::string digest = r.bytes(32, "provenance digest");
    std::copy(digest.begin(), digest.end(), s.provenance.begin());

    s.inputs.resize(s.rows * s.d_in);
    for (std::size_t i = 0; i < s.inputs.size(); ++i) {
        const std::size_t at = r.offset();
        s.inputs[i] = r.f32();
        if (!std::isfinite(s.inputs[i])) throw ParseError("non-finite shard input", at);
    }
    s.targets.resize(s.rows * s.d_out);
    for (std::size_t i = 0; i < s.targets.size(); ++i) {
        const std::size_t at = r.offset();
        s.targets[i] = r.f32();
        if (!std::isfinite(s.targets[i])) throw ParseError("non-finite shard target", at);
    }
    if (r.remaining() != 0)
        throw ParseError("trailing bytes after shard payload", r.offset());
    return s;
}

void save_stats(const std::string& path, const NormStats& s) {
    s.validate();
    ByteWriter w;
    w.put_magic(kStatsMagic);
    w.put_u32(kStatsVersion);
    w.put_u32(static_cast<std::uint32_t>(s.dim()));
    for (double v : s.mean) w.put_f64(v);
    for (double v : s.std) w.put_f64(v);
    atomic_write_file(path, w.bytes());
}

NormStats load_stats(const std::string& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kStatsMagic, "stats header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kStatsVersion)
        throw ParseError("unsupported stats version " + std::to_string(version), version_at);
    const std::uint32_t dim = r.u32();
    if (dim == 0) throw ParseError("zero stats dimension", r.offset() - 4);

    NormStats s;
    s.mean.resize(dim);
    s.std.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t at = r.offset();
        s.mean[i] = r.f64();
        if (!std::isfinite(s.mean[i])) throw ParseError("non-finite stats mean", at);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t at = r.offset();
        s.std[i] = r.f64();
        if (!std::isfinite(s.std[i]) || s.std[i] <= 0.0)
            throw ParseError("invalid stats std", at);
    }
    if (r.remaining() != 0)
        throw ParseError("trailing bytes after stats payload", r.offset());
    return s;
}

void save_gv_stats(const std::string& path, const GvStats& g) {
    g.validate();
    ByteWriter w;
    w.put_magic(kGvMagic);
    w.put_u32(kGvVersion);
    w.put_u32(static_cast<std::uint32_t>(g.reference_std.size()));
    for (double v : g.reference_std) w.put_f64(v);
    for (double v : g.produced_std) w.put_f64(v);
    atomic_write_file(path, w.bytes());
}

GvStats load_gv_stats(const std::string& path) {
    const std::string bytes = read_file(path);
    ByteReader r(bytes);
    r.expect_magic(kGvMagic, "gv stats header");
    const std::size_t version_at = r.offset();
    const std::uint32_t version = r.u32();
    if (version != kGvVersion)
        throw ParseError("unsupported gv stats version " + std::to_string(version), version_at);
    const std::uint32_t dim = r.u32();
    if (dim == 0) throw ParseError("zero gv stats dimension", r.offset() - 4);

    GvStats g;
    g.reference_std.resize(dim);
    g.produced_std.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t at = r.offset();
        g.reference_std[i] = r.f64();
        if (!std::isfinite(g.reference_std[i]) || g.reference_std[i] <= 0.0)
            throw ParseError("invalid gv reference std", at);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t at = r.offset();
        g.produced_std[i] = r.f64();
        if (!std::isfinite(g.produced_std[i]) || g.produced_std[i] <= 0.0)
            throw ParseError("invalid gv produced std", at);
    }
    if (r.remaining() != 0)
        throw ParseError("trailing bytes after gv stats payload", r.offset());
    return g;
}

} // namespace v2v
