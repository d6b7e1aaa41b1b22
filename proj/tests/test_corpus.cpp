#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "v2v/corpus.hpp"
#include "v2v/error.hpp"
#include "v2v/io.hpp"

using namespace v2v;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir() {
    static int counter = 0;
    const fs::path d =
        fs::temp_directory_path() / ("v2v_corpus_test_" + std::to_string(++counter));
    fs::remove_all(d);
    fs::create_directories(d);
    return d.string();
}

// Minimal hand-rolled wav bytes so the reader's rejections can be probed
// with fields write_wav would never emit.
std::string wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                      std::uint16_t bits, const std::vector<std::int16_t>& payload) {
    ByteWriter w;
    const std::uint32_t data_size = static_cast<std::uint32_t>(2 * payload.size());
    w.put_magic("RIFF");
    w.put_u32(36 + data_size);
    w.put_magic("WAVE");
    w.put_magic("fmt ");
    w.put_u32(16);
    w.put_u16(format);
    w.put_u16(channels);
    w.put_u32(rate);
    w.put_u32(rate * 2);
    w.put_u16(2);
    w.put_u16(bits);
    w.put_magic("data");
    w.put_u32(data_size);
    for (std::int16_t s : payload) w.put_i16(s);
    return w.bytes();
}

double rms(const Vector& v) {
    double p = 0.0;
    for (double x : v) p += x * x;
    return std::sqrt(p / static_cast<double>(v.size()));
}

Waveform difference(const Waveform& a, const Waveform& b) {
    Waveform d;
    d.sample_rate = a.sample_rate;
    d.samples.resize(a.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        d.samples[i] = a.samples[i] - b.samples[i];
    return d;
}

} // namespace

TEST_CASE("wav files round trip within one quantization step") {
    const std::string dir = tmp_dir();
    const Waveform w = synth_clean(0.7, 8000, 99);
    const std::string path = dir + "/tone.wav";
    write_wav(path, w);

    const Waveform back = read_wav(path);
    CHECK(back.sample_rate == 8000);
    REQUIRE(back.samples.size() == w.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i)
        worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
    CHECK(worst <= 1.0 / 32768.0);

    // a second write of the same waveform produces identical bytes
    write_wav(dir + "/tone2.wav", w);
    CHECK(read_file(path) == read_file(dir + "/tone2.wav"));

    // reading back what was read is lossless (already quantized)
    write_wav(dir + "/tone3.wav", back);
    const Waveform again = read_wav(dir + "/tone3.wav");
    CHECK(again.samples == back.samples);
}

TEST_CASE("wav writer rejects invalid waveforms") {
    const std::string dir = tmp_dir();
    Waveform w;
    w.sample_rate = 8000;
    CHECK_THROWS_AS(write_wav(dir + "/x.wav", w), ContractError); // empty

    w.samples = {0.0, 0.5};
    w.sample_rate = 44100;
    CHECK_THROWS_AS(write_wav(dir + "/x.wav", w), ContractError); // odd rate

    w.sample_rate = 8000;
    w.samples = {0.0, 1.5};
    CHECK_THROWS_AS(write_wav(dir + "/x.wav", w), ContractError); // out of range
}

TEST_CASE("wav reader rejects encodings outside the supported subset") {
    const std::string dir = tmp_dir();
    const std::vector<std::int16_t> payload{0, 1000, -1000, 32767};

    atomic_write_file(dir + "/float.wav", wav_bytes(3, 1, 8000, 16, payload));
    CHECK_THROWS_AS(read_wav(dir + "/float.wav"), UnsupportedFormatError);

    atomic_write_file(dir + "/stereo.wav", wav_bytes(1, 2, 8000, 16, payload));
    CHECK_THROWS_AS(read_wav(dir + "/stereo.wav"), UnsupportedFormatError);

    atomic_write_file(dir + "/8bit.wav", wav_bytes(1, 1, 8000, 8, payload));
    CHECK_THROWS_AS(read_wav(dir + "/8bit.wav"), UnsupportedFormatError);

    atomic_write_file(dir + "/44k.wav", wav_bytes(1, 1, 44100, 16, payload));
    CHECK_THROWS_AS(read_wav(dir + "/44k.wav"), UnsupportedFormatError);
}

TEST_CASE("wav parse errors carry byte offsets") {
    const std::string dir = tmp_dir();
    const std::string good = wav_bytes(1, 1, 8000, 16, {0, 100, -100, 5000});

    {
        std::string bad = good;
        bad[0] = 'X';
        atomic_write_file(dir + "/badmagic.wav", bad);
        try {
            read_wav(dir + "/badmagic.wav");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() == 0);
        }
    }
    {
        std::string bad = good;
        bad[8] = 'X'; // WAVE form type
        atomic_write_file(dir + "/badform.wav", bad);
        try {
            read_wav(dir + "/badform.wav");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() == 8);
        }
    }
    {
        // cut inside the sample payload
        atomic_write_file(dir + "/short.wav", good.substr(0, good.size() - 3));
        CHECK_THROWS_AS(read_wav(dir + "/short.wav"), ParseError);
    }
    {
        // fmt present but no data chunk
        atomic_write_file(dir + "/nodata.wav", good.substr(0, 36));
        CHECK_THROWS_AS(read_wav(dir + "/nodata.wav"), ParseError);
    }

    CHECK_THROWS_AS(read_wav(dir + "/missing.wav"), Error);
}

TEST_CASE("synthetic utterances are deterministic, bounded and gated") {
    const Waveform a = synth_clean(1.0, 8000, 7);
    const Waveform b = synth_clean(1.0, 8000, 7);
    const Waveform c = synth_clean(1.0, 8000, 8);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    CHECK(a.samples.size() == 8000);
    CHECK(a.sample_rate == 8000);

    double peak = 0.0;
    for (double x : a.samples) peak = std::max(peak, std::abs(x));
    CHECK(peak == doctest::Approx(0.5).epsilon(1e-12));

    // utterances start with a near-silent lead-in before the first voiced
    // segment: nothing but the room tone, at least 40 dB under the peak
    double lead = 0.0;
    for (std::size_t i = 0; i < 240; ++i) lead = std::max(lead, std::abs(a.samples[i]));
    CHECK(lead > 0.0);
    CHECK(lead < 0.005);

    CHECK_THROWS_AS(synth_clean(0.4, 8000, 1), ContractError);
    CHECK_THROWS_AS(synth_clean(1.0, 0, 1), ContractError);
}

TEST_CASE("synthetic utterances keep their energy low in the band") {
    // voiced content lives under 2 kHz; breath and burst components are
    // quiet enough not to move the balance
    for (std::uint64_t seed : {3ULL, 41ULL, 900ULL, 12345ULL}) {
        const Waveform w = synth_clean(1.0, 8000, seed);
        StftConfig sc;
        sc.sample_rate = 8000;
        sc.fft_size = 256;
        sc.hop = 128;
        const Spectrogram spec = stft(w, sc);
        const std::size_t cut = 2000 * sc.fft_size / 8000; // bin index at 2 kHz
        double low = 0.0, total = 0.0;
        for (std::size_t t = 0; t < spec.frames; ++t)
            for (std::size_t k = 0; k < sc.bins(); ++k) {
                const double p = std::norm(spec.at(t, k));
                total += p;
                if (k < cut) low += p;
            }
        CHECK(low / total >= 0.90);
    }
}

TEST_CASE("noise generators are deterministic and level-calibrated") {
    MixSpec spec;
    spec.seed = 5;

    for (NoiseKind kind : {NoiseKind::White, NoiseKind::Pink, NoiseKind::FilteredBabble}) {
        spec.noise_kind = kind;
        const Waveform n1 = make_noise(spec, 6000, 8000);
        const Waveform n2 = make_noise(spec, 6000, 8000);
        CHECK(n1.samples == n2.samples);
        CHECK(n1.samples.size() == 6000);
        CHECK(rms(n1.samples) == doctest::Approx(0.1).epsilon(1e-9));
    }

    spec.noise_kind = NoiseKind::White;
    const Waveform w5 = make_noise(spec, 6000, 8000);
    spec.seed = 6;
    const Waveform w6 = make_noise(spec, 6000, 8000);
    CHECK(w5.samples != w6.samples);

    CHECK_THROWS_AS(make_noise(spec, 0, 8000), ContractError);
}

TEST_CASE("file noise is read and tiled to the requested length") {
    const std::string dir = tmp_dir();
    const Waveform src = synth_clean(0.5, 8000, 123);
    write_wav(dir + "/noise.wav", src);
    const Waveform quantized = read_wav(dir + "/noise.wav");

    MixSpec spec;
    spec.noise_kind = NoiseKind::File;
    spec.noise_path = dir + "/noise.wav";
    const std::size_t n = quantized.samples.size() * 2 + 500;
    const Waveform tiled = make_noise(spec, n, 8000);
    REQUIRE(tiled.samples.size() == n);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(tiled.samples[i] == quantized.samples[i % quantized.samples.size()]);

    CHECK_THROWS_AS(make_noise(spec, 100, 16000), ContractError); // rate mismatch
}

TEST_CASE("mixing hits the requested snr exactly over the active region") {
    const Waveform clean = synth_clean(0.8, 8000, 1);
    MixSpec spec;
    spec.noise_kind = NoiseKind::White;
    spec.seed = 7;
    const Waveform noise = make_noise(spec, clean.samples.size(), 8000);

    for (double snr : {-5.0, 0.0, 10.0}) {
        const Waveform mixed = mix_at_snr(clean, noise, snr);
        REQUIRE(mixed.samples.size() == clean.samples.size());
        const double measured = measure_snr_db(clean, difference(mixed, clean));
        CHECK(std::abs(measured - snr) < 1e-9);
    }

    // at +60 dB the mix is essentially the clean signal
    const Waveform faint = mix_at_snr(clean, noise, 60.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i)
        worst = std::max(worst, std::abs(faint.samples[i] - clean.samples[i]));
    CHECK(worst < 0.01);

    // noise shorter than the clean signal is tiled, not an error
    Waveform short_noise;
    short_noise.sample_rate = 8000;
    short_noise.samples = Vector(noise.samples.begin(), noise.samples.begin() + 1000);
    const Waveform tiled_mix = mix_at_snr(clean, short_noise, 5.0);
    CHECK(std::abs(measure_snr_db(clean, difference(tiled_mix, clean)) - 5.0) < 1e-9);

    Waveform silent;
    silent.sample_rate = 8000;
    silent.samples = Vector(4000, 0.0);
    CHECK_THROWS_AS(mix_at_snr(silent, noise, 0.0), ContractError);

    Waveform wrong_rate = noise;
    wrong_rate.sample_rate = 16000;
    CHECK_THROWS_AS(mix_at_snr(clean, wrong_rate, 0.0), ContractError);

    const double bad_snr = std::nan("");
    CHECK_THROWS_AS(mix_at_snr(clean, noise, bad_snr), ContractError);
}

TEST_CASE("utterance realization is deterministic and respects its row") {
    ManifestRow row;
    row.id = "u1";
    row.mix.noise_kind = NoiseKind::Pink;
    row.mix.snr_db = 5.0;
    row.mix.seed = 42;

    const UtterancePair a = realize_utterance(row, 8000, 1.0, "");
    const UtterancePair b = realize_utterance(row, 8000, 1.0, "");
    CHECK(a.clean.samples == b.clean.samples);
    CHECK(a.noisy.samples == b.noisy.samples);
    CHECK(a.clean.samples.size() == a.noisy.samples.size());

    const double measured = measure_snr_db(a.clean, difference(a.noisy, a.clean));
    CHECK(std::abs(measured - 5.0) < 1e-9);

    double peak = 0.0;
    for (double x : a.noisy.samples) peak = std::max(peak, std::abs(x));
    CHECK(peak <= 0.999 + 1e-12);

    row.mix.seed = 43;
    const UtterancePair c = realize_utterance(row, 8000, 1.0, "");
    CHECK(a.clean.samples != c.clean.samples);

    // a very negative snr forces the peak-limiting rescale and the ratio
    // still comes out right
    row.mix.snr_db = -10.0;
    const UtterancePair loud = realize_utterance(row, 8000, 1.0, "");
    double loud_peak = 0.0;
    for (double x : loud.noisy.samples) loud_peak = std::max(loud_peak, std::abs(x));
    CHECK(loud_peak <= 0.999 + 1e-12);
    CHECK(std::abs(measure_snr_db(loud.clean, difference(loud.noisy, loud.clean)) + 10.0) <
          1e-9);
}

TEST_CASE("a clean directory overrides synthesis per utterance") {
    const std::string dir = tmp_dir();
    fs::create_directories(dir + "/clean");
    const Waveform filed = synth_clean(0.6, 8000, 77);
    write_wav(dir + "/clean/u1.wav", filed);
    const Waveform quantized = read_wav(dir + "/clean/u1.wav");

    ManifestRow row;
    row.id = "u1";
    row.mix.noise_kind = NoiseKind::White;
    row.mix.snr_db = 30.0;
    row.mix.seed = 3;

    const UtterancePair pair = realize_utterance(row, 8000, 1.0, dir);
    CHECK(pair.clean.samples == quantized.samples);

    // rows without a file fall back to synthesis
    ManifestRow other = row;
    other.id = "u2";
    const UtterancePair synth = realize_utterance(other, 8000, 1.0, dir);
    CHECK(synth.clean.samples != quantized.samples);

    // a file at the wrong rate is rejected, not resampled
    const Waveform wide = synth_clean(0.6, 16000, 78);
    write_wav(dir + "/clean/u3.wav", wide);
    ManifestRow third = row;
    third.id = "u3";
    CHECK_THROWS_AS(realize_utterance(third, 8000, 1.0, dir), ContractError);
}

TEST_CASE("manifest text round trips exactly") {
    CorpusManifest m;
    m.split = "train";
    m.profile = "desk";
    ManifestRow r1{"a_0001", {0.0, NoiseKind::White, 11, ""}};
    ManifestRow r2{"a_0002", {7.5, NoiseKind::FilteredBabble, 12, ""}};
    ManifestRow r3{"a_0003", {-2.5, NoiseKind::File, 13, "noises/hum.wav"}};
    m.rows = {r1, r2, r3};

    const std::string text = manifest_text(m);
    const CorpusManifest back = parse_manifest(text);
    REQUIRE(back.rows.size() == 3);
    CHECK(manifest_text(back) == text);
    CHECK(back.rows[0].id == "a_0001");
    CHECK(back.rows[1].mix.noise_kind == NoiseKind::FilteredBabble);
    CHECK(back.rows[1].mix.snr_db == 7.5);
    CHECK(back.rows[2].mix.noise_kind == NoiseKind::File);
    CHECK(back.rows[2].mix.noise_path == "noises/hum.wav");
    CHECK(back.rows[2].mix.snr_db == -2.5);
    CHECK(back.rows[2].mix.seed == 13);

    // comments, blank lines and CRLF endings are tolerated
    const CorpusManifest relaxed =
        parse_manifest("# corpus\n\nu1\twhite\t0\t1\r\nu2\tpink\t5\t2\n");
    CHECK(relaxed.rows.size() == 2);
    CHECK(relaxed.rows[1].mix.snr_db == 5.0);
}

TEST_CASE("manifest parse errors name the failing position") {
    try {
        parse_manifest("a\twhite\t0\t1\nbad line\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 12); // start of the second line
    }

    CHECK_THROWS_AS(parse_manifest("u1\tmauve\t0\t1\n"), ParseError);  // kind
    CHECK_THROWS_AS(parse_manifest("\twhite\t0\t1\n"), ParseError);    // empty id
    CHECK_THROWS_AS(parse_manifest("u1\twhite\tloud\t1\n"), ParseError);
    CHECK_THROWS_AS(parse_manifest("u1\twhite\t0\t-1\n"), ParseError); // seed
    CHECK_THROWS_AS(parse_manifest("u1\tfile:\t0\t1\n"), ParseError);  // empty path
    CHECK_THROWS_AS(parse_manifest("u1\tfile\t0\t1\n"), ParseError);   // bare token
    CHECK_THROWS_AS(parse_manifest("u1\twhite\t0\t1\nu1\twhite\t0\t2\n"), ContractError);
    CHECK_THROWS_AS(parse_manifest(""), ContractError);
    CHECK_THROWS_AS(parse_manifest("# nothing but comments\n"), ContractError);
}

namespace {

CorpusManifest tiny_manifest() {
    CorpusManifest m;
    m.split = "train";
    m.profile = "desk";
    m.rows = {{"t_0001", {5.0, NoiseKind::White, 21, ""}},
              {"t_0002", {0.0, NoiseKind::Pink, 22, ""}}};
    return m;
}

DatasetOptions tiny_options() {
    DatasetOptions o;
    o.stft.sample_rate = 8000;
    o.stft.fft_size = 64;
    o.stft.hop = 32;
    o.context = 3;
    o.base_duration_s = 0.6;
    return o;
}

} // namespace

TEST_CASE("datasets assemble context windows with the expected shape") {
    const CorpusManifest m = tiny_manifest();
    const DatasetOptions opts = tiny_options();
    const DatasetBundle bundle = build_dataset(m, opts);

    const std::size_t bins = opts.stft.bins();
    CHECK(bins == 33);
    CHECK(bundle.shard.d_in == 3 * bins);
    CHECK(bundle.shard.d_out == bins);
    CHECK(bundle.shard.rows > 0);
    CHECK(bundle.shard.inputs.size() == bundle.shard.rows * bundle.shard.d_in);
    CHECK(bundle.input_stats.dim() == bins);
    CHECK(bundle.target_stats.dim() == bins);
    CHECK(bundle.gv.reference_std == bundle.target_stats.std);

    // identical rebuild, bit for bit
    const DatasetBundle again = build_dataset(m, opts);
    CHECK(again.shard.inputs == bundle.shard.inputs);
    CHECK(again.shard.targets == bundle.shard.targets);
    CHECK(again.shard.provenance == bundle.shard.provenance);

    // the noise estimate block widens the input rows and changes provenance
    DatasetOptions with_nat = opts;
    with_nat.nat = true;
    const DatasetBundle nat = build_dataset(m, with_nat);
    CHECK(nat.shard.d_in == 4 * bins);
    CHECK(nat.shard.provenance != bundle.shard.provenance);

    // global standardization leaves each input bin roughly centered
    double mean_acc = 0.0;
    for (float v : bundle.shard.inputs) mean_acc += v;
    mean_acc /= static_cast<double>(bundle.shard.inputs.size());
    CHECK(std::abs(mean_acc) < 0.2); // edge replication skews it slightly
}

TEST_CASE("test shards reuse the training statistics") {
    const CorpusManifest train = tiny_manifest();
    const DatasetOptions opts = tiny_options();
    const DatasetBundle train_bundle = build_dataset(train, opts);

    CorpusManifest test;
    test.split = "test";
    test.profile = "desk";
    test.rows = {{"e_0001", {2.5, NoiseKind::White, 31, ""}}};

    DatasetOptions test_opts = opts;
    test_opts.input_stats = &train_bundle.input_stats;
    test_opts.target_stats = &train_bundle.target_stats;
    const DatasetBundle test_bundle = build_dataset(test, test_opts);
    CHECK(test_bundle.input_stats.mean == train_bundle.input_stats.mean);
    CHECK(test_bundle.input_stats.std == train_bundle.input_stats.std);
    CHECK(test_bundle.target_stats.mean == train_bundle.target_stats.mean);

    // provenance records whether stats were fitted or reused
    const DatasetBundle refit = build_dataset(test, opts);
    CHECK(refit.shard.provenance != test_bundle.shard.provenance);

    DatasetOptions half = opts;
    half.input_stats = &train_bundle.input_stats;
    CHECK_THROWS_AS(build_dataset(test, half), ContractError);

    DatasetOptions even = opts;
    even.context = 2;
    CHECK_THROWS_AS(build_dataset(train, even), ContractError);

    DatasetOptions no_lead = opts;
    no_lead.nat = true;
    no_lead.nat_lead = 0;
    CHECK_THROWS_AS(build_dataset(train, no_lead), ContractError);
}

TEST_CASE("per-utterance normalization changes the features") {
    const CorpusManifest m = tiny_manifest();
    DatasetOptions global = tiny_options();
    DatasetOptions per_utt = tiny_options();
    per_utt.norm = NormMode::PerUtterance;

    const DatasetBundle g = build_dataset(m, global);
    const DatasetBundle p = build_dataset(m, per_utt);
    CHECK(g.shard.inputs != p.shard.inputs);
    CHECK(g.shard.targets == p.shard.targets); // targets always use global stats
    CHECK(g.shard.provenance != p.shard.provenance);
}

TEST_CASE("feature shards round trip bit for bit") {
    const std::string dir = tmp_dir();
    const DatasetBundle bundle = build_dataset(tiny_manifest(), tiny_options());
    const std::string path = dir + "/train.v2vf";
    save_shard(path, bundle.shard);
    CHECK_FALSE(fs::exists(path + ".partial"));

    const FeatureShard back = load_shard(path);
    CHECK(back.rows == bundle.shard.rows);
    CHECK(back.d_in == bundle.shard.d_in);
    CHECK(back.d_out == bundle.shard.d_out);
    CHECK(back.inputs == bundle.shard.inputs);
    CHECK(back.targets == bundle.shard.targets);
    CHECK(back.provenance == bundle.shard.provenance);

    save_shard(dir + "/again.v2vf", bundle.shard);
    CHECK(read_file(path) == read_file(dir + "/again.v2vf"));
}

TEST_CASE("malformed shard files are rejected with offsets") {
    const std::string dir = tmp_dir();
    const DatasetBundle bundle = build_dataset(tiny_manifest(), tiny_options());
    const std::string path = dir + "/shard.v2vf";
    save_shard(path, bundle.shard);
    const std::string good = read_file(path);

    {
        std::string bad = good;
        bad[0] = 'X';
        atomic_write_file(dir + "/m.v2vf", bad);
        try {
            load_shard(dir + "/m.v2vf");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() == 0);
        }
    }
    {
        std::string bad = good;
        bad[4] = 2; // version bump
        atomic_write_file(dir + "/v.v2vf", bad);
        try {
            load_shard(dir + "/v.v2vf");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() == 4);
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    {
        atomic_write_file(dir + "/t.v2vf", good.substr(0, good.size() / 2));
        CHECK_THROWS_AS(load_shard(dir + "/t.v2vf"), ParseError);
    }
    {
        atomic_write_file(dir + "/g.v2vf", good + "x");
        try {
            load_shard(dir + "/g.v2vf");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("trailing") != std::string::npos);
        }
    }
    {
        std::string bad = good;
        // first input float lives right after the 52-byte header; stamp in
        // +inf (0x7F800000, little endian)
        bad[52] = '\x00';
        bad[53] = '\x00';
        bad[54] = '\x80';
        bad[55] = '\x7F';
        atomic_write_file(dir + "/inf.v2vf", bad);
        try {
            load_shard(dir + "/inf.v2vf");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() == 52);
            CHECK(std::string(e.what()).find("finite") != std::string::npos);
        }
    }
}

TEST_CASE("normalization statistics round trip bit for bit") {
    const std::string dir = tmp_dir();
    NormStats s;
    s.mean = {0.5, -1.25, 3.0};
    s.std = {1.0, 0.25, 2.5};
    const std::string path = dir + "/stats.v2vs";
    save_stats(path, s);

    const NormStats back = load_stats(path);
    CHECK(back.mean == s.mean);
    CHECK(back.std == s.std);

    const std::string good = read_file(path);
    {
        std::string bad = good;
        bad[4] = 9;
        atomic_write_file(dir + "/v.v2vs", bad);
        CHECK_THROWS_AS(load_stats(dir + "/v.v2vs"), ParseError);
    }
    {
        // zero out a std entry: header is 12 bytes, then 3 means, then stds
        std::string bad = good;
        for (int i = 0; i < 8; ++i) bad[12 + 3 * 8 + i] = '\x00';
        atomic_write_file(dir + "/z.v2vs", bad);
        try {
            load_stats(dir + "/z.v2vs");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("std") != std::string::npos);
        }
    }
    {
        atomic_write_file(dir + "/t.v2vs", good + "zz");
        CHECK_THROWS_AS(load_stats(dir + "/t.v2vs"), ParseError);
    }

    NormStats bad_dim;
    bad_dim.mean = {1.0};
    bad_dim.std = {1.0, 2.0};
    CHECK_THROWS_AS(save_stats(dir + "/bad.v2vs", bad_dim), ContractError);
}

TEST_CASE("gv statistics round trip and reject the wrong container") {
    const std::string dir = tmp_dir();
    GvStats g;
    g.reference_std = {1.0, 2.5, 0.125};
    g.produced_std = {0.5, 2.5, 4.0};
    const std::string path = dir + "/g.v2vg";
    save_gv_stats(path, g);

    const GvStats back = load_gv_stats(path);
    CHECK(back.reference_std == g.reference_std);
    CHECK(back.produced_std == g.produced_std);

    // the two stats containers share a layout but not a magic
    NormStats ns;
    ns.mean = {0.0, 0.0, 0.0};
    ns.std = {1.0, 1.0, 1.0};
    save_stats(dir + "/n.v2vs", ns);
    CHECK_THROWS_AS(load_gv_stats(dir + "/n.v2vs"), ParseError);
    CHECK_THROWS_AS(load_stats(path), ParseError);

    {
        // zero out a produced entry: 12-byte header, then 3 reference f64s
        std::string bad = read_file(path);
        for (int i = 0; i < 8; ++i) bad[12 + 3 * 8 + i] = '\x00';
        atomic_write_file(dir + "/z.v2vg", bad);
        try {
            load_gv_stats(dir + "/z.v2vg");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("produced") != std::string::npos);
        }
    }

    GvStats mismatched;
    mismatched.reference_std = {1.0};
    mismatched.produced_std = {1.0, 2.0};
    CHECK_THROWS_AS(save_gv_stats(dir + "/m.v2vg", mismatched), ContractError);
}
