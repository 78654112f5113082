#include "parceldelin/model/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "parceldelin/common/error.hpp"

namespace parceldelin::model {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class Cursor {
public:
    explicit Cursor(std::span<const std::uint8_t> b) : bytes_(b) {}
    void need(std::size_t n, const char* what) const {
        if (n > bytes_.size() - pos_) {
            throw FormatError(std::string("weight file truncated while reading ") + what);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
        pos_ += 4;
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        need(n, what);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_weights(std::span<const WeightEntry> entries) {
    std::vector<std::uint8_t> out(kWeightMagic, kWeightMagic + 4);
    put_u32(out, kWeightVersion);
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.name.size() > 0xFFFF) throw ConfigError("weight name too long: " + e.name.substr(0, 64));
        if (e.dims.size() > 0xFF) throw ConfigError("too many dimensions for weight " + e.name);
        if (nn::shape_numel(e.dims) != e.values.size()) {
            throw ShapeError("weight " + e.name + ": payload length does not match dims " + nn::shape_str(e.dims));
        }
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.push_back(static_cast<std::uint8_t>(e.dims.size()));
        for (auto d : e.dims) put_u32(out, static_cast<std::uint32_t>(d));
        for (float f : e.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    return out;
}

std::vector<WeightEntry> decode_weights(std::span<const std::uint8_t> bytes) {
    Cursor c(bytes);
    const auto magic = c.take(4, "magic");
    if (std::memcmp(magic.data(), kWeightMagic, 4) != 0) {
        throw FormatError("weight file: bad magic (expected \"PSWT\")");
    }
    const std::uint32_t version = c.u32("version");
    if (version != kWeightVersion) {
        throw FormatError("weight file: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = c.u32("entry count");
    std::vector<WeightEntry> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        WeightEntry e;
        const std::uint16_t len = c.u16("name length");
        const auto name = c.take(len, "name");
        e.name.assign(name.begin(), name.end());
        const std::uint8_t ndim = c.u8("ndim");
        for (std::uint8_t d = 0; d < ndim; ++d) e.dims.push_back(c.u32("dims"));
        const std::size_t n = nn::shape_numel(e.dims);
        e.values.resize(n);
        for (std::size_t k = 0; k < n; ++k) e.values[k] = std::bit_cast<float>(c.u32("payload"));
        out.push_back(std::move(e));
    }
    if (!c.done()) throw FormatError("weight file: trailing bytes after last entry");
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_weight_file(const std::filesystem::path& path, std::span<const WeightEntry> entries) {
    write_file_bytes(path, encode_weights(entries));
}

std::vector<WeightEntry> read_weight_file(const std::filesystem::path& path) {
    return decode_weights(read_file_bytes(path));
}

}  // namespace parceldelin::model
