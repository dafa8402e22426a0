#include "dcr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <utility>
#include <vector>

namespace dcr {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    std::vector<char> bytes;
    std::size_t pos = 0;
    std::string path;

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path + ": " + what);
    }
    void need(std::size_t n) const {
        if (bytes.size() - pos < n) fail("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * i);
        }
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(bytes.data() + pos, n);
        pos += n;
        return s;
    }
};

// Parameters are tensors; BN running statistics are plain vectors treated
// as rank-1 entries.
struct Entry {
    std::string name;
    Tensor* tensor = nullptr;
    std::vector<double>* buffer = nullptr;

    Shape shape() const {
        return tensor ? tensor->shape() : Shape{static_cast<std::int64_t>(buffer->size())};
    }
    const std::vector<double>& values() const { return tensor ? tensor->values() : *buffer; }
};

std::vector<Entry> collect_entries(Network& net) {
    std::vector<Entry> entries;
    net.visit_params(
        [&](const std::string& name, Tensor& t) { entries.push_back({name, &t, nullptr}); });
    net.visit_buffers([&](const std::string& name, std::vector<double>& b) {
        entries.push_back({name, nullptr, &b});
    });
    return entries;
}

}  // namespace

void save_checkpoint(Network& net, const std::string& path) {
    const auto entries = collect_entries(net);

    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, entries.size());
    for (const Entry& e : entries) {
        put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.append(e.name);
        const Shape shape = e.shape();
        put_u32(out, static_cast<std::uint32_t>(shape.size()));
        for (std::int64_t d : shape) put_u64(out, static_cast<std::uint64_t>(d));
        for (double v : e.values()) put_f32(out, static_cast<float>(v));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError(path + ": write failed");
}

void load_checkpoint(Network& net, const std::string& path) {
    Reader r;
    r.path = path;
    {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw FormatError(path + ": cannot open");
        r.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
    }
    if (r.str(4) != std::string(kMagic, 4)) r.fail("bad magic");
    const std::uint32_t version = r.u32();
    if (version != kVersion) r.fail("unsupported version " + std::to_string(version));
    const std::uint64_t count = r.u64();

    auto entries = collect_entries(net);
    if (count != entries.size()) {
        r.fail("entry count " + std::to_string(count) + " does not match network (" +
               std::to_string(entries.size()) + ")");
    }

    std::size_t next = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = r.str(r.u32());
        const std::uint32_t rank = r.u32();
        Shape shape(rank);
        std::int64_t n = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<std::int64_t>(r.u64());
            n *= shape[d];
        }
        std::vector<double> values(static_cast<std::size_t>(n));
        for (auto& v : values) v = static_cast<double>(r.f32());

        Entry& target = entries[next++];
        if (name != target.name) {
            r.fail("entry '" + name + "' where '" + target.name + "' was expected");
        }
        if (shape != target.shape()) {
            r.fail("entry '" + name + "' has shape " + shape_str(shape) + ", expected " +
                   shape_str(target.shape()));
        }
        if (target.tensor) {
            *target.tensor = Tensor(std::move(shape), std::move(values));
        } else {
            *target.buffer = std::move(values);
        }
    }
    if (r.pos != r.bytes.size()) r.fail("trailing bytes after last entry");
}

}  // namespace dcr
