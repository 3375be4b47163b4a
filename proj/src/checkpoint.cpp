#include "iarn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "iarn/config.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace iarn {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

void put_bytes(std::vector<uint8_t>& out, const void* data, size_t n) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    out.insert(out.end(), p, p + n);
}

class Reader {
public:
    Reader(const std::vector<uint8_t>& bytes) : bytes_(bytes) {}

    uint32_t u32() {
        need(4);
        uint32_t v;
        std::memcpy(&v, bytes_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    void floats(float* dst, size_t count) {
        need(count * 4);
        std::memcpy(dst, bytes_.data() + pos_, count * 4);
        pos_ += count * 4;
    }
    size_t pos() const { return pos_; }
    size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(size_t n) {
        if (pos_ + n > bytes_.size()) throw IoError("checkpoint truncated");
    }
    const std::vector<uint8_t>& bytes_;
    size_t pos_ = 0;
};

uint32_t crc_of(const uint8_t* data, size_t n) {
    return static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

std::vector<uint8_t> serialize_checkpoint(const TrainConfig& cfg,
                                          std::vector<NamedParam<float>> params) {
    std::vector<uint8_t> out;
    put_bytes(out, kCheckpointMagic, 4);
    put_u32(out, kCheckpointVersion);

    std::string config_text = serialize_train_config(cfg);
    put_u32(out, static_cast<uint32_t>(config_text.size()));
    put_bytes(out, config_text.data(), config_text.size());

    put_u32(out, static_cast<uint32_t>(params.size()));
    for (const auto& p : params) {
        put_u32(out, static_cast<uint32_t>(p.name.size()));
        put_bytes(out, p.name.data(), p.name.size());
        put_u32(out, static_cast<uint32_t>(p.value.rank()));
        for (int d : p.value.shape()) put_u32(out, static_cast<uint32_t>(d));
        put_bytes(out, p.value.values().data(), static_cast<size_t>(p.value.size()) * 4);
    }

    put_u32(out, crc_of(out.data(), out.size()));
    return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 + 4) throw IoError("checkpoint too small");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw IoError("checkpoint magic mismatch");

    uint32_t stored_crc;
    std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
    uint32_t actual_crc = crc_of(bytes.data(), bytes.size() - 4);
    if (stored_crc != actual_crc) throw IoError("checkpoint CRC mismatch: file is corrupted");

    Reader r(bytes);
    r.str(4);  // magic
    uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));

    uint32_t config_len = r.u32();
    std::string config_text = r.str(config_len);

    LoadedCheckpoint loaded;
    loaded.config = parse_train_config(config_text);
    loaded.net = Backbone<float>(loaded.config.backbone);

    std::map<std::string, BasicTensor<float>> by_name;
    for (auto& p : loaded.net.params()) by_name.emplace(p.name, p.value);

    uint32_t count = r.u32();
    if (count != by_name.size())
        throw IoError("checkpoint holds " + std::to_string(count) + " parameters, model needs " +
                      std::to_string(by_name.size()));
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = r.u32();
        std::string name = r.str(name_len);
        uint32_t rank = r.u32();
        std::vector<int> dims(rank);
        for (uint32_t d = 0; d < rank; ++d) dims[d] = static_cast<int>(r.u32());

        auto it = by_name.find(name);
        if (it == by_name.end()) throw IoError("unexpected parameter '" + name + "'");
        if (it->second.shape() != dims)
            throw IoError("parameter '" + name + "' has shape " + shape_string(dims) +
                          ", model expects " + shape_string(it->second.shape()));
        r.floats(it->second.mutable_values().data(),
                 static_cast<size_t>(it->second.size()));
    }
    if (r.remaining() != 4) throw IoError("checkpoint has trailing bytes");
    return loaded;
}

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     std::vector<NamedParam<float>> params) {
    std::vector<uint8_t> bytes = serialize_checkpoint(cfg, std::move(params));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw IoError("read failure on '" + path + "'");
    return deserialize_checkpoint(bytes);
}

}  // namespace iarn
