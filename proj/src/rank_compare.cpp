#include <pathsgl/rank_compare.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/random.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace pathsgl {

Index RankArray::n_ranked() const
{
    return static_cast<Index>(std::count(ranked.begin(), ranked.end(), true));
}

RankArray RankArray::full(std::vector<Index> ranks)
{
    RankArray a;
    a.fill = ranks.size();
    a.ranked.assign(ranks.size(), true);
    a.rank = std::move(ranks);
    return a;
}

RankPair build_rank_arrays(const std::vector<std::string>& list_a, const std::vector<std::string>& list_b)
{
    require(!list_a.empty() && !list_b.empty(), ErrorCode::InvalidArgument, "ranked lists must be nonempty");
    RankPair pair;
    std::unordered_map<std::string, Index> pos;
    auto intern = [&](const std::string& id) {
        auto [it, inserted] = pos.emplace(id, pair.universe.size());
        if (inserted) pair.universe.push_back(id);
        return it->second;
    };
    std::vector<std::pair<Index, Index>> ra, rb;
    {
        std::unordered_map<std::string, int> seen;
        for (std::size_t i = 0; i < list_a.size(); ++i) {
            require(seen.emplace(list_a[i], 1).second, ErrorCode::DuplicateId, "duplicate id in first list: " + list_a[i]);
            ra.emplace_back(intern(list_a[i]), i + 1);
        }
    }
    {
        std::unordered_map<std::string, int> seen;
        for (std::size_t i = 0; i < list_b.size(); ++i) {
            require(seen.emplace(list_b[i], 1).second, ErrorCode::DuplicateId, "duplicate id in second list: " + list_b[i]);
            rb.emplace_back(intern(list_b[i]), i + 1);
        }
    }
    pair.p_star = pair.universe.size();
    pair.k_max = std::min(list_a.size(), list_b.size());
    for (auto* side : {&pair.tau, &pair.sigma}) {
        side->fill = pair.p_star;
        side->rank.assign(pair.p_star, pair.p_star);
        side->ranked.assign(pair.p_star, false);
    }
    for (auto [i, r] : ra) {
        pair.tau.rank[i] = r;
        pair.tau.ranked[i] = true;
    }
    for (auto [i, r] : rb) {
        pair.sigma.rank[i] = r;
        pair.sigma.ranked[i] = true;
    }
    return pair;
}

namespace {

void check_pair(const RankArray& tau, const RankArray& sigma, Index k_min, Index k_max)
{
    require(tau.size() == sigma.size(), ErrorCode::UniverseMismatch, "rank arrays cover different universes");
    require(k_min >= 1 && k_min <= k_max, ErrorCode::OutOfRange, "k range must satisfy 1 <= k_min <= k_max");
    require(k_max <= tau.size(), ErrorCode::OutOfRange, "k exceeds the universe size");
}

// Accumulates Ca(k) for k in [k_min, k_max] into out (size k_max - k_min + 1).
// With a = min rank and b = max rank a variable contributes 0 while k < a,
// (k+1-a)/(k+1+a) for a <= k <= b-2, and (b-a)/(b+a) from k = b-1 on.
void accumulate_profile(const std::vector<Index>& tau, const std::vector<Index>& sigma, Index k_min, Index k_max, std::vector<double>& out)
{
    const Index K = k_max - k_min + 1;
    std::vector<double> step(K + 1, 0.0);
    for (std::size_t i = 0; i < tau.size(); ++i) {
        const Index a = std::min(tau[i], sigma[i]);
        const Index b = std::max(tau[i], sigma[i]);
        if (a == b || k_max < a) continue;
        const Index lo = std::max(a, k_min);
        if (b >= 2) {
            const Index hi = std::min(b - 2, k_max);
            for (Index k = lo; k <= hi && hi >= lo; ++k) {
                const double c = static_cast<double>(k + 1);
                out[k - k_min] += (c - static_cast<double>(a)) / (c + static_cast<double>(a));
            }
        }
        const Index from = std::max(b - 1, k_min);
        if (from <= k_max) step[from - k_min] += static_cast<double>(b - a) / static_cast<double>(b + a);
    }
    double run = 0.0;
    for (Index k = 0; k < K; ++k) {
        run += step[k];
        out[k] += run;
    }
}

constexpr Index kBlocks = 64;

} // namespace

double canberra_topk(const RankArray& tau, const RankArray& sigma, Index k)
{
    check_pair(tau, sigma, k, k);
    const double cap = static_cast<double>(k + 1);
    double total = 0.0;
    for (Index i = 0; i < tau.size(); ++i) {
        const double t = std::min(static_cast<double>(tau.rank[i]), cap);
        const double s = std::min(static_cast<double>(sigma.rank[i]), cap);
        total += std::abs(t - s) / (t + s);
    }
    return total;
}

std::vector<double> canberra_profile(const RankArray& tau, const RankArray& sigma, Index k_min, Index k_max)
{
    check_pair(tau, sigma, k_min, k_max);
    std::vector<double> out(k_max - k_min + 1, 0.0);
    accumulate_profile(tau.rank, sigma.rank, k_min, k_max, out);
    return out;
}

std::vector<double> expected_canberra_profile(Index k_min, Index k_max, Index p, Index pairs, std::uint64_t seed, unsigned threads)
{
    require(pairs >= 1, ErrorCode::InvalidArgument, "need at least one permutation pair");
    require(p >= 1 && k_min >= 1 && k_min <= k_max && k_max <= p, ErrorCode::OutOfRange, "k range must lie in 1..p");
    const Index K = k_max - k_min + 1;
    const Index blocks = std::min(kBlocks, pairs);
    std::vector<std::vector<double>> partial(blocks, std::vector<double>(K, 0.0));
    parallel_for(blocks, threads, [&](std::size_t blk) {
        std::vector<Index> t, s;
        for (Index m = pairs * blk / blocks; m < pairs * (blk + 1) / blocks; ++m) {
            auto rng = make_rng(seed, "canberra-pair", m);
            t = random_permutation(p, rng);
            s = random_permutation(p, rng);
            for (auto& v : t) ++v;
            for (auto& v : s) ++v;
            accumulate_profile(t, s, k_min, k_max, partial[blk]);
        }
    });
    std::vector<double> mean(K, 0.0);
    for (const auto& part : partial)
        for (Index k = 0; k < K; ++k) mean[k] += part[k];
    for (auto& v : mean) v /= static_cast<double>(pairs);
    return mean;
}

double expected_canberra(Index k, Index p, Index pairs, std::uint64_t seed)
{
    return expected_canberra_profile(k, k, p, pairs, seed, 1)[0];
}

double normalized_canberra(const RankArray& tau, const RankArray& sigma, Index k, double expected)
{
    const double ca = canberra_topk(tau, sigma, k);
    if (expected > 0.0) return ca / expected;
    require(ca == 0.0, ErrorCode::ZeroExpectation, "expected distance is zero but the observed distance is not");
    return 0.0;
}

std::vector<double> permutation_pvalues(
    const RankArray& tau, const RankArray& sigma, Index k_min, Index k_max, Index permutations,
    std::uint64_t seed, unsigned threads
)
{
    require(permutations >= 1, ErrorCode::InvalidArgument, "need at least one permutation");
    check_pair(tau, sigma, k_min, k_max);
    const Index K = k_max - k_min + 1;
    const std::vector<double> observed = canberra_profile(tau, sigma, k_min, k_max);
    std::vector<Index> ranked_idx;
    for (Index i = 0; i < sigma.size(); ++i)
        if (sigma.ranked[i]) ranked_idx.push_back(i);
    std::vector<Index> sigma_ranks;
    for (Index i : ranked_idx) sigma_ranks.push_back(sigma.rank[i]);

    const Index blocks = std::min(kBlocks, permutations);
    std::vector<std::vector<Index>> hits(blocks, std::vector<Index>(K, 0));
    parallel_for(blocks, threads, [&](std::size_t blk) {
        std::vector<Index> permuted = sigma.rank;
        std::vector<double> ca(K);
        for (Index z = permutations * blk / blocks; z < permutations * (blk + 1) / blocks; ++z) {
            auto rng = make_rng(seed, "rank-permutation", z);
            const auto perm = random_permutation(ranked_idx.size(), rng);
            for (std::size_t m = 0; m < ranked_idx.size(); ++m) permuted[ranked_idx[m]] = sigma_ranks[perm[m]];
            std::fill(ca.begin(), ca.end(), 0.0);
            accumulate_profile(tau.rank, permuted, k_min, k_max, ca);
            for (Index k = 0; k < K; ++k)
                if (observed[k] <= ca[k]) ++hits[blk][k];
        }
    });
    std::vector<double> p(K, 0.0);
    for (Index k = 0; k < K; ++k) {
        Index total = 0;
        for (const auto& h : hits) total += h[k];
        p[k] = static_cast<double>(total) / static_cast<double>(permutations);
    }
    return p;
}

std::vector<double> bh_qvalues(const std::vector<double>& pvalues)
{
    const std::size_t m = pvalues.size();
    for (double p : pvalues) require(p >= 0.0 && p <= 1.0, ErrorCode::OutOfRange, "p-values must lie in [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double v = pvalues[order[r]] * (static_cast<double>(m) / static_cast<double>(r + 1));
        running = std::min(running, v);
        q[order[r]] = std::min(running, 1.0);
    }
    return q;
}

namespace {

void sort_mean_ranks(std::vector<MeanRank>& v)
{
    std::sort(v.begin(), v.end(), [](const MeanRank& a, const MeanRank& b) {
        if (a.mean != b.mean) return a.mean < b.mean;
        return a.index < b.index;
    });
}

MeanRank make_mean_rank(const RankArray& tau, const RankArray& sigma, Index i)
{
    return MeanRank{i, tau.rank[i], sigma.rank[i], 0.5 * static_cast<double>(tau.rank[i] + sigma.rank[i])};
}

} // namespace

std::vector<MeanRank> consensus_set(const RankArray& tau, const RankArray& sigma, Index k)
{
    require(tau.size() == sigma.size(), ErrorCode::UniverseMismatch, "rank arrays cover different universes");
    std::vector<MeanRank> out;
    for (Index i = 0; i < tau.size(); ++i)
        if (tau.ranked[i] && sigma.ranked[i] && tau.rank[i] <= k && sigma.rank[i] <= k) out.push_back(make_mean_rank(tau, sigma, i));
    sort_mean_ranks(out);
    return out;
}

MeanRankSummary mean_rank_summary(const RankArray& tau, const RankArray& sigma)
{
    require(tau.size() == sigma.size(), ErrorCode::UniverseMismatch, "rank arrays cover different universes");
    MeanRankSummary s;
    for (Index i = 0; i < tau.size(); ++i)
        if (tau.ranked[i] && sigma.ranked[i]) s.entries.push_back(make_mean_rank(tau, sigma, i));
    sort_mean_ranks(s.entries);
    s.empty_intersection = s.entries.empty();
    return s;
}

RankComparison compare_rankings(const std::vector<std::string>& list_a, const std::vector<std::string>& list_b, const CompareOptions& opts)
{
    const RankPair pair = build_rank_arrays(list_a, list_b);
    const Index k_max = opts.k_max == 0 ? pair.k_max : opts.k_max;
    require(opts.k_min >= 1 && opts.k_min <= k_max, ErrorCode::OutOfRange, "k range must satisfy 1 <= k_min <= k_max");
    require(k_max <= pair.k_max, ErrorCode::OutOfRange, "k_max exceeds min(|A|, |B|)");

    RankComparison c;
    c.universe = pair.universe;
    c.size_a = list_a.size();
    c.size_b = list_b.size();
    c.p_star = pair.p_star;
    c.ca = canberra_profile(pair.tau, pair.sigma, opts.k_min, k_max);
    c.expected = expected_canberra_profile(opts.k_min, k_max, pair.p_star, opts.expected_pairs, derive_seed(opts.seed, "expected-canberra"), opts.threads);
    c.p_value = permutation_pvalues(pair.tau, pair.sigma, opts.k_min, k_max, opts.permutations, derive_seed(opts.seed, "canberra-pvalues"), opts.threads);
    c.q_value = bh_qvalues(c.p_value);
    const Index K = k_max - opts.k_min + 1;
    c.ca_star.resize(K);
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < K; ++i) {
        c.k.push_back(opts.k_min + i);
        if (c.expected[i] > 0.0) {
            c.ca_star[i] = c.ca[i] / c.expected[i];
        } else {
            require(c.ca[i] == 0.0, ErrorCode::ZeroExpectation, "expected distance is zero but the observed distance is not");
            c.ca_star[i] = 0.0;
        }
        if (c.ca_star[i] < best) {
            best = c.ca_star[i];
            c.argmin_k = c.k[i];
        }
    }
    for (Index i = 0; i < pair.p_star; ++i)
        if (pair.tau.ranked[i] && pair.sigma.ranked[i]) ++c.intersection;
    c.consensus_k = opts.consensus_k == 0 ? c.argmin_k : opts.consensus_k;
    c.consensus = consensus_set(pair.tau, pair.sigma, c.consensus_k);
    c.mean_ranks = mean_rank_summary(pair.tau, pair.sigma);
    return c;
}

namespace {

std::vector<std::string> split_ws(const std::string& line)
{
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string f;
    while (in >> f) out.push_back(f);
    return out;
}

bool parse_double(const std::string& s, double& v)
{
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    return ec == std::errc() && ptr == end;
}

} // namespace

std::vector<std::string> load_ranked_list(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto f = split_ws(line);
        if (!f.empty() && f[0][0] != '#') rows.push_back(std::move(f));
    }
    require(!rows.empty(), ErrorCode::InvalidArgument, "empty ranked list: " + path.string());

    std::size_t id_col = 0, rank_col = 1;
    bool ranked = rows[0].size() >= 2;
    std::size_t first = 0;
    const auto& head = rows[0];
    auto find_col = [&](const char* name) {
        return static_cast<std::size_t>(std::find(head.begin(), head.end(), name) - head.begin());
    };
    if (find_col("id") < head.size()) {
        first = 1;
        id_col = find_col("id");
        rank_col = find_col("rank");
        ranked = rank_col < head.size();
    } else if (ranked) {
        double v;
        if (!parse_double(head[1], v)) first = 1;
    }

    std::vector<std::pair<double, std::string>> items;
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& f = rows[r];
        require(f.size() > id_col, ErrorCode::RaggedRow, "missing id column in " + path.string());
        double rank = static_cast<double>(items.size() + 1);
        if (ranked) {
            require(f.size() > rank_col && parse_double(f[rank_col], rank), ErrorCode::InvalidArgument,
                    "bad rank value in " + path.string() + " line " + std::to_string(r + 1));
        }
        items.emplace_back(rank, f[id_col]);
    }
    std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> ids;
    ids.reserve(items.size());
    for (auto& it : items) ids.push_back(std::move(it.second));
    return ids;
}

} // namespace pathsgl
