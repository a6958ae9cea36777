#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "illusion/audio.hpp"
#include "illusion/error.hpp"
#include "oracles.hpp"

using namespace illusion;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& b, const char* t) { b.insert(b.end(), t, t + 4); }

// Hand-assembled RIFF file, independent of the library writer.
std::vector<std::uint8_t> make_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t rate,
                                   std::uint16_t bits, const std::vector<std::int16_t>& frames,
                                   bool extra_chunk = false) {
    std::vector<std::uint8_t> data;
    for (auto s : frames) put_u16(data, static_cast<std::uint16_t>(s));
    std::vector<std::uint8_t> b;
    put_tag(b, "RIFF");
    put_u32(b, 0);
    put_tag(b, "WAVE");
    if (extra_chunk) {
        put_tag(b, "LIST");
        put_u32(b, 3);
        b.insert(b.end(), {'a', 'b', 'c', 0});  // odd size plus pad byte
    }
    put_tag(b, "fmt ");
    put_u32(b, 16);
    put_u16(b, format);
    put_u16(b, channels);
    put_u32(b, rate);
    put_u32(b, rate * channels * bits / 8);
    put_u16(b, static_cast<std::uint16_t>(channels * bits / 8));
    put_u16(b, bits);
    put_tag(b, "data");
    put_u32(b, static_cast<std::uint32_t>(data.size()));
    b.insert(b.end(), data.begin(), data.end());
    const auto riff = static_cast<std::uint32_t>(b.size() - 8);
    for (int i = 0; i < 4; ++i) b[4 + i] = static_cast<std::uint8_t>(riff >> (8 * i));
    return b;
}

}  // namespace

TEST_CASE("one second of silence") {
    const auto c = decode_wav(make_wav(1, 1, 16000, 16, std::vector<std::int16_t>(16000, 0)));
    CHECK(c.size() == 16000);
    CHECK(c.sample_rate() == 16000);
    CHECK(c.peak() == 0.0);
}

TEST_CASE("full-scale positive samples scale by 1/32768") {
    const auto c = decode_wav(make_wav(1, 1, 16000, 16, std::vector<std::int16_t>(10, 32767)));
    for (double s : c.samples()) CHECK(s == 32767.0 / 32768.0);
    const auto n = decode_wav(make_wav(1, 1, 16000, 16, {-32768}));
    CHECK(n.samples()[0] == -1.0);
}

TEST_CASE("stereo is averaged to mono") {
    std::vector<std::int16_t> frames;
    for (int i = 0; i < 100; ++i) {
        frames.push_back(16384);
        frames.push_back(-16384);
    }
    const auto c = decode_wav(make_wav(1, 2, 16000, 16, frames));
    CHECK(c.size() == 100);
    for (double s : c.samples()) CHECK(s == 0.0);

    const auto d = decode_wav(make_wav(1, 2, 8000, 16, {1000, 3000}));
    CHECK(d.samples()[0] == doctest::Approx(2000.0 / 32768.0));
}

TEST_CASE("unknown chunks before fmt are skipped") {
    const auto c = decode_wav(make_wav(1, 1, 16000, 16, {100, 200}, true));
    CHECK(c.size() == 2);
}

TEST_CASE("malformed and unsupported files") {
    std::vector<std::uint8_t> junk{'R', 'I', 'F', 'X', 0, 0, 0, 0, 'W', 'A', 'V', 'E'};
    CHECK_THROWS_AS(decode_wav(junk), FormatError);
    CHECK_THROWS_AS(decode_wav(std::vector<std::uint8_t>{}), FormatError);
    auto truncated = make_wav(1, 1, 16000, 16, std::vector<std::int16_t>(50, 1));
    truncated.resize(30);
    CHECK_THROWS_AS(decode_wav(truncated), FormatError);

    CHECK_THROWS_AS(decode_wav(make_wav(3, 1, 16000, 16, {0})), UnsupportedFormatError);
    CHECK_THROWS_AS(decode_wav(make_wav(1, 1, 16000, 8, {0})), UnsupportedFormatError);
    CHECK_THROWS_AS(decode_wav(make_wav(1, 3, 16000, 16, {0, 0, 0})), UnsupportedFormatError);
}

TEST_CASE("writer emits a canonical 44-byte header") {
    const AudioClip c({0.5, -0.5}, 16000);
    const auto b = encode_wav(c);
    REQUIRE(b.size() == 48);
    CHECK(std::string(b.begin(), b.begin() + 4) == "RIFF");
    CHECK(std::string(b.begin() + 8, b.begin() + 16) == "WAVEfmt ");
    CHECK(std::string(b.begin() + 36, b.begin() + 40) == "data");
    CHECK(b[20] == 1);   // PCM
    CHECK(b[22] == 1);   // mono
    CHECK(b[34] == 16);  // bits
    CHECK(b == make_wav(1, 1, 16000, 16, {16384, -16384}));
}

TEST_CASE("round trip stays within one quantization step") {
    fixtures::TempDir dir;
    const AudioClip c(oracle::sine(440.0, 0.5, 16000.0, 16000), 16000);
    save_wav(c, dir / "a.wav");
    const AudioClip back = load_wav(dir / "a.wav");
    REQUIRE(back.size() == c.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) worst = std::max(worst, std::abs(back.samples()[i] - c.samples()[i]));
    CHECK(worst <= 1.0 / 32768.0);

    // A second round trip is byte identical.
    save_wav(back, dir / "b.wav");
    CHECK(fixtures::read_file(dir / "a.wav") == fixtures::read_file(dir / "b.wav"));
}

TEST_CASE("full-scale positive is clamped, not wrapped") {
    CHECK(quantize_sample(1.0) == 32767);
    CHECK(quantize_sample(-1.0) == -32768);
    CHECK(quantize_sample(2.0) == 32767);
    CHECK(quantize_sample(-3.0) == -32768);
    const auto b = encode_wav(AudioClip({1.0}, 16000));
    CHECK(b[44] == 0xff);
    CHECK(b[45] == 0x7f);
}

TEST_CASE("empty clip writes a zero-length data chunk") {
    fixtures::TempDir dir;
    save_wav(AudioClip::empty(), dir / "e.wav");
    const auto bytes = fixtures::read_file(dir / "e.wav");
    CHECK(bytes.size() == 44);
    CHECK(load_wav(dir / "e.wav").is_empty());
}

TEST_CASE("unwritable and missing paths raise io errors") {
    CHECK_THROWS_AS(save_wav(AudioClip({0.0}, 16000), "/nonexistent-dir/x/y.wav"), IoError);
    CHECK_THROWS_AS(load_wav("/nonexistent-dir/none.wav"), IoError);
}
