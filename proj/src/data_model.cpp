#include <pathsgl/data_model.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

namespace pathsgl {

namespace {

std::vector<std::string> split_fields(const std::string& line, bool tabs_only)
{
    std::vector<std::string> out;
    if (tabs_only) {
        std::string field;
        std::istringstream in(line);
        while (std::getline(in, field, '\t')) {
            while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
            while (!field.empty() && field.front() == ' ') field.erase(field.begin());
            out.push_back(field);
        }
        return out;
    }
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

bool blank(const std::string& line)
{
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::ofstream open_output(const std::filesystem::path& path)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    return out;
}

void require_unique(const std::vector<std::string>& ids, const std::string& what)
{
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
        require(seen.insert(id).second, ErrorCode::DuplicateId, what + " '" + id + "' appears twice");
    }
}

double parse_real(const std::string& tok, const std::string& context)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
    } catch (...) {
    }
    throw Error(ErrorCode::MissingValue, "non-numeric value '" + tok + "' in " + context);
}

} // namespace

void GenotypeMatrix::validate() const
{
    require(
        values.rows() == static_cast<Eigen::Index>(samples.size()) &&
            values.cols() == static_cast<Eigen::Index>(snp_ids.size()),
        ErrorCode::InvalidArgument, "genotype shape does not match its identifiers"
    );
    require_unique(samples, "sample");
    require_unique(snp_ids, "feature");
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) {
            const double v = values(i, j);
            require(
                v == 0.0 || v == 1.0 || v == 2.0, ErrorCode::MissingValue,
                "genotype for sample '" + samples[i] + "', feature '" + snp_ids[j] + "' is not 0/1/2"
            );
        }
    }
}

void Phenotype::validate() const
{
    require(
        y.size() == static_cast<Eigen::Index>(samples.size()), ErrorCode::InvalidArgument,
        "phenotype length does not match sample count"
    );
    require(
        covariates.size() == 0 || covariates.rows() == y.size(), ErrorCode::InvalidArgument,
        "covariate rows do not match samples"
    );
    require_unique(samples, "sample");
    require(y.allFinite(), ErrorCode::MissingValue, "phenotype contains non-finite values");
}

Index PathwayMap::expanded_width() const
{
    Index w = 0;
    for (const auto& p : pathways) w += p.members.size();
    return w;
}

void PathwayMap::validate() const
{
    require(snp_to_genes.size() == feature_ids.size(), ErrorCode::InvalidArgument, "snp_to_genes size mismatch");
    require(gene_to_pathways.size() == gene_ids.size(), ErrorCode::InvalidArgument, "gene_to_pathways size mismatch");
    for (const auto& p : pathways) {
        require(!p.members.empty(), ErrorCode::InvalidArgument, "pathway '" + p.id + "' is empty");
        for (std::size_t k = 0; k < p.members.size(); ++k) {
            require(p.members[k] < feature_ids.size(), ErrorCode::OutOfRange, "pathway member out of range");
            require(
                k == 0 || p.members[k - 1] < p.members[k], ErrorCode::DuplicateId,
                "pathway '" + p.id + "' members must be ascending and duplicate-free"
            );
        }
    }
}

std::vector<Index> StandardizedData::constant_columns() const
{
    std::vector<Index> out;
    for (Index j = 0; j < constant.size(); ++j)
        if (constant[j]) out.push_back(j);
    return out;
}

// ---- IO ---------------------------------------------------------------

GenotypeMatrix load_genotypes(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!blank(line)) {
            header = split_fields(line, false);
            break;
        }
    }
    require(!header.empty(), ErrorCode::Io, "genotype file " + path.string() + " has no header");

    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        rows.push_back(split_fields(line, false));
    }

    // The header either lists only feature IDs, or starts with a label for the sample column.
    GenotypeMatrix g;
    const std::size_t width = rows.empty() ? header.size() + 1 : rows.front().size();
    if (header.size() + 1 == width) {
        g.snp_ids = header;
    } else if (header.size() == width) {
        g.snp_ids.assign(header.begin() + 1, header.end());
    } else {
        throw Error(ErrorCode::RaggedRow, "header width does not match data rows in " + path.string());
    }
    const std::size_t p = g.snp_ids.size();
    g.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        require(
            row.size() == p + 1, ErrorCode::RaggedRow,
            "row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) + " fields, expected " +
                std::to_string(p + 1)
        );
        g.samples.push_back(row[0]);
        for (std::size_t j = 0; j < p; ++j) {
            const std::string& cell = row[j + 1];
            double v;
            if (cell == "0") v = 0.0;
            else if (cell == "1") v = 1.0;
            else if (cell == "2") v = 2.0;
            else
                throw Error(
                    ErrorCode::MissingValue,
                    "cell '" + cell + "' for sample '" + row[0] + "', feature '" + g.snp_ids[j] + "'"
                );
            g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    require_unique(g.samples, "sample");
    require_unique(g.snp_ids, "feature");
    return g;
}

void write_genotypes(const std::filesystem::path& path, const GenotypeMatrix& genotype)
{
    auto out = open_output(path);
    out << "sample_id";
    for (const auto& id : genotype.snp_ids) out << '\t' << id;
    out << '\n';
    for (Eigen::Index i = 0; i < genotype.values.rows(); ++i) {
        out << genotype.samples[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < genotype.values.cols(); ++j)
            out << '\t' << static_cast<int>(genotype.values(i, j));
        out << '\n';
    }
}

Phenotype load_phenotype(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!blank(line)) {
            header = split_fields(line, false);
            break;
        }
    }
    require(header.size() >= 2, ErrorCode::Io, "phenotype header needs sample_id and y columns");
    Phenotype ph;
    ph.covariate_names.assign(header.begin() + 2, header.end());
    const std::size_t c = ph.covariate_names.size();
    std::vector<double> ys;
    std::vector<std::vector<double>> covs;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto f = split_fields(line, false);
        require(
            f.size() == header.size(), ErrorCode::RaggedRow,
            "phenotype line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields"
        );
        ph.samples.push_back(f[0]);
        ys.push_back(parse_real(f[1], "phenotype line " + std::to_string(lineno)));
        std::vector<double> row;
        for (std::size_t k = 0; k < c; ++k)
            row.push_back(parse_real(f[2 + k], "phenotype line " + std::to_string(lineno)));
        covs.push_back(std::move(row));
    }
    ph.y = Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
    ph.covariates.resize(static_cast<Eigen::Index>(ys.size()), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < covs.size(); ++i)
        for (std::size_t k = 0; k < c; ++k)
            ph.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = covs[i][k];
    ph.validate();
    return ph;
}

void write_phenotype(const std::filesystem::path& path, const Phenotype& phenotype)
{
    auto out = open_output(path);
    out << "sample_id\ty";
    for (const auto& name : phenotype.covariate_names) out << '\t' << name;
    out << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < phenotype.samples.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out << phenotype.samples[i] << '\t' << phenotype.y(r);
        for (Eigen::Index k = 0; k < phenotype.covariates.cols(); ++k) out << '\t' << phenotype.covariates(r, k);
        out << '\n';
    }
}

std::vector<std::pair<std::string, std::vector<std::string>>> load_gmt(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::vector<std::pair<std::string, std::vector<std::string>>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        auto f = split_fields(line, true);
        if (f.empty() || f[0].empty()) continue;
        std::vector<std::string> genes;
        for (std::size_t k = 1; k < f.size(); ++k)
            if (!f[k].empty()) genes.push_back(f[k]);
        out.emplace_back(f[0], std::move(genes));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> load_snp_gene_map(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto f = split_fields(line, false);
        require(f.size() == 2, ErrorCode::RaggedRow, "snp-gene map line " + std::to_string(lineno) + " needs 2 fields");
        out.emplace_back(f[0], f[1]);
    }
    return out;
}

void write_gmt(const std::filesystem::path& path, const PathwayMap& map)
{
    auto out = open_output(path);
    std::vector<std::vector<Index>> genes_of(map.n_pathways());
    for (Index g = 0; g < map.n_genes(); ++g)
        for (Index l : map.gene_to_pathways[g]) genes_of[l].push_back(g);
    for (Index l = 0; l < map.n_pathways(); ++l) {
        out << map.pathways[l].id;
        for (Index g : genes_of[l]) out << '\t' << map.gene_ids[g];
        out << '\n';
    }
}

void write_snp_gene_map(const std::filesystem::path& path, const PathwayMap& map)
{
    auto out = open_output(path);
    for (Index j = 0; j < map.n_features(); ++j)
        for (Index g : map.snp_to_genes[j]) out << map.feature_ids[j] << '\t' << map.gene_ids[g] << '\n';
}

// ---- construction -----------------------------------------------------

PathwayMap build_pathway_map(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& pathway_genes,
    const std::vector<std::pair<std::string, std::string>>& snp_gene_pairs,
    const std::vector<std::string>& feature_ids
)
{
    PathwayMap map;
    map.feature_ids = feature_ids;
    map.snp_to_genes.assign(feature_ids.size(), {});

    std::unordered_map<std::string, Index> feature_index;
    for (Index j = 0; j < feature_ids.size(); ++j) feature_index.emplace(feature_ids[j], j);

    std::unordered_map<std::string, Index> gene_index;
    std::vector<std::vector<Index>> gene_features;
    std::size_t unknown_features = 0;
    for (const auto& [snp, gene] : snp_gene_pairs) {
        auto fit = feature_index.find(snp);
        if (fit == feature_index.end()) {
            ++unknown_features;
            continue;
        }
        auto [git, inserted] = gene_index.emplace(gene, map.gene_ids.size());
        if (inserted) {
            map.gene_ids.push_back(gene);
            gene_features.emplace_back();
        }
        auto& genes = map.snp_to_genes[fit->second];
        if (std::find(genes.begin(), genes.end(), git->second) == genes.end()) {
            genes.push_back(git->second);
            gene_features[git->second].push_back(fit->second);
        }
    }
    if (unknown_features > 0)
        map.warnings.push_back(std::to_string(unknown_features) + " feature-gene pairs reference features absent from the genotype");

    map.gene_to_pathways.assign(map.gene_ids.size(), {});
    std::unordered_set<std::string> pathway_ids;
    std::size_t unknown_genes = 0;
    for (const auto& [pid, genes] : pathway_genes) {
        require(pathway_ids.insert(pid).second, ErrorCode::DuplicateId, "pathway '" + pid + "' appears twice");
        std::set<Index> members;
        std::vector<Index> member_genes;
        for (const auto& gene : genes) {
            auto git = gene_index.find(gene);
            if (git == gene_index.end()) {
                ++unknown_genes;
                continue;
            }
            if (std::find(member_genes.begin(), member_genes.end(), git->second) != member_genes.end()) continue;
            member_genes.push_back(git->second);
            members.insert(gene_features[git->second].begin(), gene_features[git->second].end());
        }
        if (members.empty()) {
            map.warnings.push_back("EmptyPathway: '" + pid + "' has no mappable features and was dropped");
            continue;
        }
        const Index l = map.pathways.size();
        for (Index g : member_genes) map.gene_to_pathways[g].push_back(l);
        map.pathways.push_back({pid, std::vector<Index>(members.begin(), members.end())});
    }
    if (unknown_genes > 0)
        map.warnings.push_back("UnknownGene: " + std::to_string(unknown_genes) + " pathway genes have no mapped features and were ignored");
    return map;
}

PathwayMap load_pathway_annotation(
    const std::filesystem::path& gmt_path,
    const std::filesystem::path& snp_gene_path,
    const GenotypeMatrix& genotype
)
{
    return build_pathway_map(load_gmt(gmt_path), load_snp_gene_map(snp_gene_path), genotype.snp_ids);
}

PathwayMap drop_features(const PathwayMap& map, const std::vector<bool>& excluded)
{
    require(excluded.size() == map.n_features(), ErrorCode::InvalidArgument, "exclusion mask size mismatch");
    PathwayMap out;
    out.feature_ids = map.feature_ids;
    out.gene_ids = map.gene_ids;
    out.snp_to_genes = map.snp_to_genes;
    out.warnings = map.warnings;
    out.gene_to_pathways.assign(map.n_genes(), {});

    std::vector<Index> new_index(map.n_pathways(), static_cast<Index>(-1));
    for (Index l = 0; l < map.n_pathways(); ++l) {
        Pathway p{map.pathways[l].id, {}};
        for (Index j : map.pathways[l].members)
            if (!excluded[j]) p.members.push_back(j);
        if (p.members.empty()) {
            out.warnings.push_back("EmptyPathway: '" + p.id + "' has only excluded features and was dropped");
            continue;
        }
        new_index[l] = out.pathways.size();
        out.pathways.push_back(std::move(p));
    }
    for (Index g = 0; g < map.n_genes(); ++g)
        for (Index l : map.gene_to_pathways[g])
            if (new_index[l] != static_cast<Index>(-1)) out.gene_to_pathways[g].push_back(new_index[l]);
    return out;
}

Phenotype align_phenotype(const Phenotype& phenotype, const std::vector<std::string>& samples)
{
    phenotype.validate();
    require(
        phenotype.samples.size() == samples.size(), ErrorCode::SampleMismatch,
        "genotype has " + std::to_string(samples.size()) + " samples, phenotype has " +
            std::to_string(phenotype.samples.size())
    );
    std::unordered_map<std::string, Index> row;
    for (Index i = 0; i < phenotype.samples.size(); ++i) row.emplace(phenotype.samples[i], i);
    Phenotype out;
    out.samples = samples;
    out.covariate_names = phenotype.covariate_names;
    out.y.resize(phenotype.y.size());
    out.covariates.resize(phenotype.covariates.rows(), phenotype.covariates.cols());
    for (Index i = 0; i < samples.size(); ++i) {
        auto it = row.find(samples[i]);
        require(it != row.end(), ErrorCode::SampleMismatch, "sample '" + samples[i] + "' has no phenotype");
        const auto dst = static_cast<Eigen::Index>(i);
        const auto src = static_cast<Eigen::Index>(it->second);
        out.y(dst) = phenotype.y(src);
        if (phenotype.covariates.cols() > 0) out.covariates.row(dst) = phenotype.covariates.row(src);
    }
    return out;
}

StandardizedData standardize_arrays(
    const Matrix& counts,
    const Vector& y,
    const Matrix& covariates,
    std::vector<std::string> samples,
    std::vector<std::string> feature_ids
)
{
    const auto n = counts.rows();
    const auto p = counts.cols();
    require(y.size() == n, ErrorCode::SampleMismatch, "response length does not match genotype rows");
    require(covariates.size() == 0 || covariates.rows() == n, ErrorCode::SampleMismatch, "covariate rows mismatch");
    require(n >= 2, ErrorCode::InvalidArgument, "need at least two samples");

    StandardizedData d;
    d.samples = std::move(samples);
    d.feature_ids = std::move(feature_ids);

    Vector resp = y;
    if (covariates.cols() > 0) {
        Matrix design(n, covariates.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(covariates.cols()) = covariates;
        d.covariate_coefficients = design.colPivHouseholderQr().solve(resp);
        resp -= design * d.covariate_coefficients;
    }
    d.y_mean = resp.mean();
    resp.array() -= d.y_mean;
    d.y = std::move(resp);

    d.X = counts;
    d.column_means = counts.colwise().mean().transpose();
    d.column_norms.resize(p);
    d.constant.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
        auto col = d.X.col(j);
        col.array() -= d.column_means(j);
        const double ss = col.squaredNorm();
        d.column_norms(j) = std::sqrt(ss);
        if (!(ss > 1e-24 * std::max(1.0, counts.col(j).squaredNorm()))) {
            col.setZero();
            d.column_norms(j) = 0.0;
            d.constant[static_cast<std::size_t>(j)] = true;
        } else {
            col /= d.column_norms(j);
        }
    }
    return d;
}

StandardizedData standardize(const GenotypeMatrix& genotype, const Phenotype& phenotype)
{
    const Phenotype aligned = align_phenotype(phenotype, genotype.samples);
    return standardize_arrays(genotype.values, aligned.y, aligned.covariates, genotype.samples, genotype.snp_ids);
}

ExpandedIndex expand_overlaps(const PathwayMap& map)
{
    map.validate();
    ExpandedIndex e;
    e.offsets.reserve(map.n_pathways() + 1);
    e.offsets.push_back(0);
    for (const auto& p : map.pathways) {
        e.back_map.insert(e.back_map.end(), p.members.begin(), p.members.end());
        e.offsets.push_back(e.back_map.size());
    }
    return e;
}

} // namespace pathsgl
