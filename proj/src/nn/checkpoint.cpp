#include "cyberdial/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <set>

namespace cyberdial::nn {

namespace {

constexpr char kMagic[8] = {'C', 'Y', 'D', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s)
{
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw CheckpointError("truncated checkpoint");
    return v;
}

std::string get_string(std::istream& in)
{
    const auto n = get<std::uint32_t>(in);
    if (n > (1u << 20)) throw CheckpointError("corrupt checkpoint string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw CheckpointError("truncated checkpoint");
    return s;
}

CheckpointHeader read_header(std::istream& in)
{
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw CheckpointError("not a checkpoint file");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    CheckpointHeader h;
    h.scenario = get_string(in);
    h.algorithm = get_string(in);
    h.hidden_dim = get<std::int32_t>(in);
    h.mixer_dim = get<std::int32_t>(in);
    h.message_bits = get<std::int32_t>(in);
    h.train_steps = get<std::uint64_t>(in);
    return h;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    return in;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header, const ParamStore& store)
{
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
        out.write(kMagic, 8);
        put<std::uint32_t>(out, kCheckpointVersion);
        put_string(out, header.scenario);
        put_string(out, header.algorithm);
        put<std::int32_t>(out, header.hidden_dim);
        put<std::int32_t>(out, header.mixer_dim);
        put<std::int32_t>(out, header.message_bits);
        put<std::uint64_t>(out, header.train_steps);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
        for (std::size_t k = 0; k < store.size(); ++k) {
            const Parameter& p = store[k];
            put_string(out, p.name);
            put<std::int32_t>(out, p.value.rows);
            put<std::int32_t>(out, p.value.cols);
            out.write(reinterpret_cast<const char*>(p.value.data.data()),
                      static_cast<std::streamsize>(p.value.size() * sizeof(double)));
            out.write(reinterpret_cast<const char*>(p.sq_avg.data.data()),
                      static_cast<std::streamsize>(p.sq_avg.size() * sizeof(double)));
        }
        if (!out) throw CheckpointError("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path)
{
    auto in = open_in(path);
    return read_header(in);
}

CheckpointHeader load_checkpoint(const std::filesystem::path& path, ParamStore& store)
{
    auto in = open_in(path);
    CheckpointHeader header = read_header(in);
    const auto count = get<std::uint32_t>(in);
    if (count != store.size())
        throw CheckpointError("checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                              std::to_string(store.size()));
    std::set<std::string> seen;
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::string name = get_string(in);
        if (!store.contains(name)) throw CheckpointError("checkpoint tensor '" + name + "' not in model");
        if (!seen.insert(name).second) throw CheckpointError("duplicate tensor '" + name + "'");
        Parameter& p = store.get(name);
        const auto rows = get<std::int32_t>(in);
        const auto cols = get<std::int32_t>(in);
        if (rows != p.value.rows || cols != p.value.cols)
            throw CheckpointError("shape mismatch for '" + name + "': checkpoint " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + ", model " + std::to_string(p.value.rows) + "x" +
                                  std::to_string(p.value.cols));
        in.read(reinterpret_cast<char*>(p.value.data.data()), static_cast<std::streamsize>(p.value.size() * 8));
        in.read(reinterpret_cast<char*>(p.sq_avg.data.data()), static_cast<std::streamsize>(p.sq_avg.size() * 8));
        if (!in) throw CheckpointError("truncated checkpoint");
    }
    store.set_version(header.train_steps);
    return header;
}

}  // namespace cyberdial::nn
