#pragma once

#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "recap/csv.hpp"
#include "recap/errors.hpp"
#include "recap/estimators.hpp"
#include "recap/experiments.hpp"
#include "recap/population.hpp"
#include "recap/sampling.hpp"

namespace recap {

// --- degree sequences: header "degree" --------------------------------------

inline std::string degree_csv(const std::vector<int>& degrees) {
    std::string out = "degree\n";
    for (int d : degrees)
        out += std::to_string(d) + "\n";
    return out;
}

inline void write_degree_csv(const std::string& path, const std::vector<int>& degrees) {
    atomic_write_file(path, degree_csv(degrees));
}

inline std::vector<int> read_degree_csv(const std::string& path) {
    std::vector<int> degrees;
    read_csv(path, {"degree"}, [&](std::size_t line, const std::vector<std::string>& fields) {
        const std::int64_t d = parse_int_field(fields[0], path, line, "degree");
        if (d < 1)
            throw ParseError(path + ":" + std::to_string(line) + ": degree must be positive");
        degrees.push_back(static_cast<int>(d));
    });
    if (degrees.empty())
        throw ParseError(path + ": no degree rows");
    return degrees;
}

// --- populations with strata: "id,degree,stratum" ----------------------------

inline std::string population_csv(const Population& pop) {
    if (!pop.has_strata())
        throw MissingCovariate("population has no stratum labels; export the degree sequence instead");
    std::string out = "id,degree,stratum\n";
    for (std::size_t i = 0; i < pop.size(); ++i)
        out += std::to_string(i) + "," + std::to_string(pop.degrees[i]) + "," + pop.strata[i] + "\n";
    return out;
}

inline void write_population_csv(const std::string& path, const Population& pop) {
    atomic_write_file(path, population_csv(pop));
}

inline Population read_population_csv(const std::string& path) {
    Population pop;
    read_csv(path, {"id", "degree", "stratum"}, [&](std::size_t line, const std::vector<std::string>& fields) {
        const std::int64_t id = parse_int_field(fields[0], path, line, "id");
        if (id != static_cast<std::int64_t>(pop.degrees.size()))
            throw ParseError(path + ":" + std::to_string(line) + ": ids must run 0,1,2,... without gaps");
        const std::int64_t d = parse_int_field(fields[1], path, line, "degree");
        if (d < 1)
            throw ParseError(path + ":" + std::to_string(line) + ": degree must be positive");
        pop.degrees.push_back(static_cast<int>(d));
        pop.strata.push_back(fields[2]);
    });
    if (pop.degrees.empty())
        throw ParseError(path + ": no population rows");
    return pop;
}

// --- networks as edge lists: "u,v" -------------------------------------------

inline std::string edge_csv(const Network& net) {
    std::string out = "u,v\n";
    for (std::size_t u = 0; u < net.node_count(); ++u)
        for (std::int32_t v : net.adjacency[u])
            if (static_cast<std::size_t>(v) > u)
                out += std::to_string(u) + "," + std::to_string(v) + "\n";
    return out;
}

inline void write_edge_csv(const std::string& path, const Network& net) {
    atomic_write_file(path, edge_csv(net));
}

inline Network read_edge_csv(const std::string& path) {
    std::vector<std::pair<std::int64_t, std::int64_t>> edges;
    std::int64_t max_node = -1;
    read_csv(path, {"u", "v"}, [&](std::size_t line, const std::vector<std::string>& fields) {
        const std::int64_t u = parse_int_field(fields[0], path, line, "u");
        const std::int64_t v = parse_int_field(fields[1], path, line, "v");
        if (u < 0 || v < 0)
            throw ParseError(path + ":" + std::to_string(line) + ": node ids must be non-negative");
        if (u == v)
            throw ParseError(path + ":" + std::to_string(line) + ": self-loops are not allowed");
        edges.emplace_back(u, v);
        max_node = std::max({max_node, u, v});
    });
    Network net;
    net.adjacency.resize(static_cast<std::size_t>(max_node + 1));
    for (const auto& [u, v] : edges) {
        net.adjacency[static_cast<std::size_t>(u)].push_back(static_cast<std::int32_t>(v));
        net.adjacency[static_cast<std::size_t>(v)].push_back(static_cast<std::int32_t>(u));
    }
    for (auto& nbrs : net.adjacency) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    return net;
}

// --- two-stage study tables: "id,in_capture,in_recapture,weight" -------------

struct StudyTable {
    SampleMembership capture;
    SampleMembership recapture;
    std::vector<double> weights; // per individual

    bool operator==(const StudyTable& other) const {
        return capture.flags == other.capture.flags && recapture.flags == other.recapture.flags &&
               weights == other.weights;
    }
};

inline StudyTable make_study_table(const SampleMembership& capture, const SampleMembership& recapture,
                                   std::vector<double> weights) {
    if (capture.population_size != recapture.population_size || weights.size() != capture.population_size)
        throw SizeMismatch("study table pieces cover different population sizes");
    return StudyTable{capture, recapture, std::move(weights)};
}

inline std::string membership_csv(const StudyTable& table) {
    std::string out = "id,in_capture,in_recapture,weight\n";
    for (std::size_t i = 0; i < table.weights.size(); ++i) {
        out += std::to_string(i);
        out += table.capture.flags[i] ? ",1," : ",0,";
        out += table.recapture.flags[i] ? "1," : "0,";
        out += format_double(table.weights[i]);
        out += "\n";
    }
    return out;
}

inline void write_membership_csv(const std::string& path, const StudyTable& table) {
    atomic_write_file(path, membership_csv(table));
}

inline StudyTable read_membership_csv(const std::string& path) {
    StudyTable table;
    table.capture.stage = Stage::Capture;
    table.recapture.stage = Stage::Recapture;
    read_csv(path, {"id", "in_capture", "in_recapture", "weight"},
             [&](std::size_t line, const std::vector<std::string>& fields) {
                 const std::int64_t id = parse_int_field(fields[0], path, line, "id");
                 if (id != static_cast<std::int64_t>(table.weights.size()))
                     throw ParseError(path + ":" + std::to_string(line) + ": ids must run 0,1,2,... without gaps");
                 table.capture.flags.push_back(parse_bool_field(fields[1], path, line, "in_capture") ? 1 : 0);
                 table.recapture.flags.push_back(parse_bool_field(fields[2], path, line, "in_recapture") ? 1 : 0);
                 const double w = parse_double_field(fields[3], path, line, "weight");
                 if (!(w > 0.0))
                     throw ParseError(path + ":" + std::to_string(line) + ": weight must be positive");
                 table.weights.push_back(w);
             });
    if (table.weights.empty())
        throw ParseError(path + ": no study rows");
    table.capture.population_size = table.weights.size();
    table.recapture.population_size = table.weights.size();
    return table;
}

// --- recruitment forests: "recruit_id,recruiter_id,wave,tree_id" -------------

inline std::string forest_csv(const RecruitmentForest& forest) {
    std::string out = "recruit_id,recruiter_id,wave,tree_id\n";
    for (const Recruitment& r : forest.nodes) {
        out += std::to_string(r.recruit) + ",";
        if (r.recruiter >= 0)
            out += std::to_string(r.recruiter);
        out += "," + std::to_string(r.wave) + "," + std::to_string(r.tree) + "\n";
    }
    return out;
}

inline void write_forest_csv(const std::string& path, const RecruitmentForest& forest) {
    atomic_write_file(path, forest_csv(forest));
}

inline RecruitmentForest read_forest_csv(const std::string& path) {
    RecruitmentForest forest;
    read_csv(path, {"recruit_id", "recruiter_id", "wave", "tree_id"},
             [&](std::size_t line, const std::vector<std::string>& fields) {
                 Recruitment r;
                 r.recruit = static_cast<std::int32_t>(parse_int_field(fields[0], path, line, "recruit_id"));
                 r.recruiter = fields[1].empty()
                                   ? -1
                                   : static_cast<std::int32_t>(parse_int_field(fields[1], path, line, "recruiter_id"));
                 r.wave = static_cast<std::int32_t>(parse_int_field(fields[2], path, line, "wave"));
                 r.tree = static_cast<std::int32_t>(parse_int_field(fields[3], path, line, "tree_id"));
                 forest.nodes.push_back(r);
             });
    return forest;
}

// --- recapture study files: "weight,in_first" --------------------------------

inline std::string recapture_members_csv(const std::vector<Member>& members) {
    std::string out = "weight,in_first\n";
    for (const Member& m : members) {
        out += format_double(m.weight);
        out += m.in_first ? ",1\n" : ",0\n";
    }
    return out;
}

inline void write_recapture_members_csv(const std::string& path, const std::vector<Member>& members) {
    atomic_write_file(path, recapture_members_csv(members));
}

inline std::vector<Member> read_recapture_members_csv(const std::string& path) {
    std::vector<Member> members;
    read_csv(path, {"weight", "in_first"}, [&](std::size_t line, const std::vector<std::string>& fields) {
        Member m;
        m.weight = parse_double_field(fields[0], path, line, "weight");
        if (!(m.weight > 0.0))
            throw ParseError(path + ":" + std::to_string(line) + ": weight must be positive");
        m.in_first = parse_bool_field(fields[1], path, line, "in_first");
        members.push_back(m);
    });
    if (members.empty())
        throw ParseError(path + ": no member rows");
    return members;
}

// --- count tables: "group,capture_size,recapture_size,recaptured[,weights_file]"

inline std::vector<CountTableRow> read_count_table_csv(const std::string& path) {
    std::vector<CountTableRow> rows;
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    read_csv(
        path, {"group", "capture_size", "recapture_size", "recaptured"},
        [&](std::size_t line, const std::vector<std::string>& fields) {
            CountTableRow row;
            row.group = fields[0];
            row.capture_size = parse_int_field(fields[1], path, line, "capture_size");
            row.recapture_size = parse_int_field(fields[2], path, line, "recapture_size");
            row.recaptured = parse_int_field(fields[3], path, line, "recaptured");
            if (fields.size() == 5 && !fields[4].empty()) {
                const std::filesystem::path ref(fields[4]);
                row.members = read_recapture_members_csv(ref.is_absolute() ? ref.string() : (base / ref).string());
            }
            try {
                row.validate();
            } catch (const SizeMismatch& e) {
                throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
            }
            rows.push_back(std::move(row));
        },
        "weights_file");
    if (rows.empty())
        throw ParseError(path + ": no table rows");
    return rows;
}

inline std::string count_results_csv(const std::vector<CountTableResult>& results) {
    std::string out = "group,naive,adjusted\n";
    for (const CountTableResult& r : results) {
        out += r.group + ",";
        if (r.naive)
            out += format_double(*r.naive);
        out += ",";
        if (r.adjusted)
            out += format_double(*r.adjusted);
        out += "\n";
    }
    return out;
}

// --- sweep results: "lambda,estimator,mean,std,degenerate_runs" --------------

inline std::string sweep_csv(const SweepSummary& summary) {
    std::string out = "lambda,estimator,mean,std,degenerate_runs\n";
    for (const SweepRow& row : summary.rows) {
        out += format_double(row.exponent) + ",naive," + format_double(row.naive_mean) + "," +
               format_double(row.naive_std) + "," + std::to_string(row.degenerate_runs) + "\n";
        out += format_double(row.exponent) + ",adjusted," + format_double(row.adjusted_mean) + "," +
               format_double(row.adjusted_std) + "," + std::to_string(row.degenerate_runs) + "\n";
    }
    return out;
}

} // namespace recap
