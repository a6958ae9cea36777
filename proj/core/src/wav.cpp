#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "illusion/audio.hpp"
#include "illusion/error.hpp"

namespace illusion {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

std::int16_t quantize_sample(double value) {
    const double scaled = std::round(value * 32768.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
        throw FormatError("not a RIFF/WAVE stream");
    }
    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::span<const std::uint8_t> data;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (size > bytes.size() - body) {
            // Tolerate a data chunk whose declared size overruns (truncated
            // streams); anything else is malformed.
            if (!tag_is(bytes, pos, "data")) throw FormatError("chunk overruns file");
            data = bytes.subspan(body);
            have_data = true;
            break;
        }
        if (tag_is(bytes, pos, "fmt ")) {
            if (size < 16) throw FormatError("fmt chunk too small");
            std::uint16_t tag = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            rate = read_u32(bytes, body + 4);
            bits = read_u16(bytes, body + 14);
            if (tag == kFormatExtensible && size >= 26) tag = read_u16(bytes, body + 24);
            if (tag != kFormatPcm) throw UnsupportedFormatError("WAV encoding is not PCM");
            have_fmt = true;
        } else if (tag_is(bytes, pos, "data")) {
            data = bytes.subspan(body, size);
            have_data = true;
        }
        pos = body + size + (size & 1u);
    }
    if (!have_fmt) throw FormatError("missing fmt chunk");
    if (!have_data) throw FormatError("missing data chunk");
    if (bits != 16) throw UnsupportedFormatError("only 16-bit PCM is supported");
    if (channels != 1 && channels != 2) throw UnsupportedFormatError("only mono or stereo is supported");
    if (rate < kMinSampleRate) throw UnsupportedFormatError("sample rate below 8000 Hz");

    const std::size_t frame_bytes = 2u * channels;
    const std::size_t frames = data.size() / frame_bytes;
    std::vector<double> samples(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const auto raw = static_cast<std::int16_t>(read_u16(data, i * frame_bytes + 2 * c));
            acc += static_cast<double>(raw) / 32768.0;
        }
        samples[i] = acc / channels;
    }
    return AudioClip(std::move(samples), rate);
}

AudioClip load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
    const auto data_bytes = static_cast<std::uint32_t>(clip.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, clip.sample_rate());
    put_u32(out, clip.sample_rate() * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    for (double s : clip.samples()) put_u16(out, static_cast<std::uint16_t>(quantize_sample(s)));
    return out;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
    const auto bytes = encode_wav(clip);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace illusion
