#include "micns/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "micns/errors.hpp"

namespace micns {

namespace {

// Guard against corrupt headers requesting absurd allocations.
constexpr std::uint64_t kMaxElements = 100'000'000;

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    put_u32(buf, bits);
}

std::string read_exact(std::istream& in, std::size_t n, const std::string& origin,
                       const char* what) {
    std::string buf(n, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(n));
    std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != n) {
        std::ostringstream os;
        os << origin << ": truncated " << what << ", expected " << n << " bytes, got " << got;
        throw IoError(IoError::Code::truncated, os.str());
    }
    return buf;
}

std::uint16_t get_u16(const std::string& b, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[off]) |
                                      (static_cast<unsigned char>(b[off + 1]) << 8));
}

std::uint32_t get_u32(const std::string& b, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(b[off + static_cast<std::size_t>(i)]);
    return v;
}

}  // namespace

void save_tensor(std::ostream& out, const Tensor& t) {
    std::string buf;
    buf.reserve(10 + 4 * t.rank() + 4 * t.size());
    buf.append(kTensorMagic, 4);
    put_u16(buf, kTensorVersion);
    put_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : t.data()) put_f32(buf, static_cast<float>(v));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError(IoError::Code::open_failed, "failed writing tensor stream");
}

Tensor load_tensor(std::istream& in, const std::string& origin) {
    std::string head = read_exact(in, 10, origin, "header");
    if (std::memcmp(head.data(), kTensorMagic, 4) != 0)
        throw IoError(IoError::Code::bad_magic,
                      origin + ": bad magic, not a tensor file");
    std::uint16_t version = get_u16(head, 4);
    if (version != kTensorVersion)
        throw IoError(IoError::Code::bad_version,
                      origin + ": unsupported format version " + std::to_string(version));
    std::uint32_t rank = get_u32(head, 6);
    if (rank == 0 || rank > 4)
        throw IoError(IoError::Code::bad_header,
                      origin + ": rank " + std::to_string(rank) + " outside 1..4");

    std::string dims_raw = read_exact(in, 4 * rank, origin, "dimension list");
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint32_t d = get_u32(dims_raw, 4 * i);
        if (d == 0)
            throw IoError(IoError::Code::bad_header, origin + ": zero dimension in header");
        count *= d;
        if (count > kMaxElements)
            throw IoError(IoError::Code::dim_overflow,
                          origin + ": dimensions imply more than " +
                              std::to_string(kMaxElements) + " elements");
        shape[i] = d;
    }

    std::string payload = read_exact(in, 4 * static_cast<std::size_t>(count), origin, "payload");
    if (in.peek() != std::istream::traits_type::eof())
        throw IoError(IoError::Code::bad_header, origin + ": trailing bytes after payload");

    std::vector<double> data(static_cast<std::size_t>(count));
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::uint32_t bits = get_u32(payload, 4 * i);
        data[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for writing");
    save_tensor(f, t);
    f.close();
    if (!f)
        throw IoError(IoError::Code::open_failed, "failed writing '" + path.string() + "'");
}

Tensor load_tensor(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for reading");
    return load_tensor(f, path.string());
}

}  // namespace micns
