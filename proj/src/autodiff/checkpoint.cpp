#include "dbmm/autodiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dbmm/core/errors.hpp"

namespace dbmm {

namespace {

constexpr char kMagic[8] = {'D', 'B', 'M', 'M', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("checkpoint: truncated while reading " + what);
    return v;
}

} // namespace

void save_param_blocks(const std::string& path, uint32_t model_tag,
                       const std::vector<ParamBlock>& blocks) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("checkpoint: cannot open '" + path + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, kCheckpointFormatVersion);
    write_pod<uint32_t>(out, model_tag);
    write_pod<uint32_t>(out, static_cast<uint32_t>(blocks.size()));
    for (const auto& b : blocks) {
        write_pod<uint32_t>(out, static_cast<uint32_t>(b.name.size()));
        out.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(b.dims.size()));
        for (int32_t d : b.dims) write_pod<int32_t>(out, d);
        size_t n = 1;
        for (int32_t d : b.dims) n *= static_cast<size_t>(d);
        if (n != b.data.size()) {
            throw ShapeError("checkpoint: block '" + b.name +
                             "' dims do not match data length");
        }
        out.write(reinterpret_cast<const char*>(b.data.data()),
                  static_cast<std::streamsize>(n * sizeof(double)));
    }
    out.flush();
    if (!out) throw Error("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_param_blocks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw Error("checkpoint: '" + path + "' is not a DBMM checkpoint");
    }
    const auto version = read_pod<uint32_t>(in, "format version");
    if (version != kCheckpointFormatVersion) {
        throw Error("checkpoint: unsupported format version " +
                    std::to_string(version));
    }
    LoadedCheckpoint ck;
    ck.model_tag = read_pod<uint32_t>(in, "model tag");
    const auto n_blocks = read_pod<uint32_t>(in, "block count");
    ck.blocks.resize(n_blocks);
    for (auto& b : ck.blocks) {
        const auto name_len = read_pod<uint32_t>(in, "block name length");
        b.name.resize(name_len);
        in.read(b.name.data(), name_len);
        if (!in) throw Error("checkpoint: truncated block name");
        const auto n_dims = read_pod<uint32_t>(in, "dim count");
        b.dims.resize(n_dims);
        size_t n = 1;
        for (auto& d : b.dims) {
            d = read_pod<int32_t>(in, "dim");
            if (d < 0) throw Error("checkpoint: negative dimension");
            n *= static_cast<size_t>(d);
        }
        b.data.resize(n);
        in.read(reinterpret_cast<char*>(b.data.data()),
                static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw Error("checkpoint: truncated payload in block '" + b.name + "'");
    }
    return ck;
}

} // namespace dbmm
