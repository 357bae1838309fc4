#include <pathsgl/common.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/random.hpp>

#include <cstdlib>
#include <numeric>
#include <string>

namespace pathsgl {

const char* to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
        case ErrorCode::MissingValue: return "MissingValue";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::RaggedRow: return "RaggedRow";
        case ErrorCode::SampleMismatch: return "SampleMismatch";
        case ErrorCode::AlphaZero: return "AlphaZero";
        case ErrorCode::UniverseMismatch: return "UniverseMismatch";
        case ErrorCode::ZeroExpectation: return "ZeroExpectation";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::EmptyTruth: return "EmptyTruth";
        case ErrorCode::ZeroMafSum: return "ZeroMafSum";
        case ErrorCode::InvalidTopology: return "InvalidTopology";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    }
    return "Unknown";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index)
{
    // FNV-1a over the stream name, then mix with master and index.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(master ^ h) + splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::vector<Index> random_permutation(Index n, Rng& rng)
{
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    // Explicit Fisher-Yates with our own bounded draw so the sequence does not
    // depend on the standard library's shuffle implementation.
    for (Index i = n; i > 1; --i) {
        const Index j = static_cast<Index>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng)
{
    require(k <= n, ErrorCode::InvalidArgument, "sample size exceeds population");
    std::vector<Index> pool(n);
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
        const Index j = i + static_cast<Index>(rng() % (n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

unsigned resolve_threads(unsigned requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SGL_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

} // namespace pathsgl
