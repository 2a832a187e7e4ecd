#include "lfopt/graph_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace lfopt {

namespace {

int64_t parse_int(std::string_view tok, std::string_view what) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError("bad " + std::string(what) + " '" + std::string(tok) + "'");
    return v;
}

TensorSpec parse_shape(std::string_view tok, int bpe) {
    TensorSpec t;
    t.bytes_per_element = bpe;
    size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        size_t comma = tok.find(',', pos);
        bool last = (i == 3);
        if (last != (comma == std::string_view::npos))
            throw ParseError("shape must have 4 dims: '" + std::string(tok) + "'");
        std::string_view part = last ? tok.substr(pos) : tok.substr(pos, comma - pos);
        t.dims[static_cast<size_t>(i)] = parse_int(part, "shape dim");
        pos = comma + 1;
    }
    t.validate();
    return t;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream is(line);
    std::string t;
    while (is >> t) {
        if (t[0] == '#') break;
        toks.push_back(t);
    }
    return toks;
}

} // namespace

CompGraph parse_graph(const std::string& text, int bpe) {
    struct RawNode {
        OpNode node;
        int declared_id;
    };
    std::vector<RawNode> raw;
    std::map<int64_t, int> index_of; // declared id -> position in raw
    std::vector<std::pair<int64_t, int64_t>> raw_edges;
    std::vector<std::pair<int64_t, TensorSpec>> raw_inputs;
    std::vector<int64_t> raw_outputs;

    std::istringstream stream(text);
    std::string line;
    int lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        auto fail = [&](const std::string& msg) -> ParseError {
            return ParseError("line " + std::to_string(lineno) + ": " + msg);
        };
        const std::string& kind = toks[0];
        if (kind == "node") {
            if (toks.size() < 4) throw fail("node needs id, kind and out=");
            RawNode rn;
            rn.declared_id = static_cast<int>(parse_int(toks[1], "node id"));
            if (rn.declared_id < 0) throw fail("negative node id");
            rn.node.kind = op_kind_from_string(toks[2]);
            bool have_out = false;
            for (size_t i = 3; i < toks.size(); ++i) {
                const std::string& t = toks[i];
                size_t eq = t.find('=');
                if (eq == std::string::npos) throw fail("expected key=value, got '" + t + "'");
                std::string key = t.substr(0, eq);
                std::string val = t.substr(eq + 1);
                if (key == "out") {
                    rn.node.output = parse_shape(val, bpe);
                    have_out = true;
                } else if (key == "k") {
                    size_t x = val.find('x');
                    if (x == std::string::npos) throw fail("kernel must be <h>x<w>");
                    rn.node.kernel_hw = {static_cast<int>(parse_int(val.substr(0, x), "kernel h")),
                                         static_cast<int>(parse_int(val.substr(x + 1), "kernel w"))};
                } else if (key == "s") {
                    rn.node.stride = static_cast<int>(parse_int(val, "stride"));
                } else if (key == "d") {
                    rn.node.dilation = static_cast<int>(parse_int(val, "dilation"));
                } else if (key == "w") {
                    int64_t w = parse_int(val, "weight bytes");
                    if (w < 0) throw fail("negative weight bytes");
                    rn.node.weight_bytes = static_cast<uint64_t>(w);
                } else {
                    throw fail("unknown key '" + key + "'");
                }
            }
            if (!have_out) throw fail("node missing out=");
            if (!index_of.emplace(rn.declared_id, static_cast<int>(raw.size())).second)
                throw fail("duplicate node id " + std::to_string(rn.declared_id));
            raw.push_back(std::move(rn));
        } else if (kind == "edge") {
            if (toks.size() != 3) throw fail("edge needs exactly two ids");
            raw_edges.emplace_back(parse_int(toks[1], "edge src"), parse_int(toks[2], "edge dst"));
        } else if (kind == "input") {
            if (toks.size() != 3) throw fail("input needs id and shape");
            raw_inputs.emplace_back(parse_int(toks[1], "input id"), parse_shape(toks[2], bpe));
        } else if (kind == "output") {
            if (toks.size() != 2) throw fail("output needs id");
            raw_outputs.push_back(parse_int(toks[1], "output id"));
        } else {
            throw fail("unknown record '" + kind + "'");
        }
    }
    if (raw.empty()) throw ParseError("no nodes declared");

    auto lookup = [&](int64_t declared) {
        auto it = index_of.find(declared);
        if (it == index_of.end())
            throw DanglingEdge("undeclared node " + std::to_string(declared));
        return it->second;
    };

    // Compact declared ids to 0..n-1 preserving declared order (ascending,
    // thanks to the map ordering off declared id).
    std::vector<int> compact(raw.size());
    {
        int next = 0;
        for (auto& [declared, pos] : index_of) compact[static_cast<size_t>(pos)] = next++;
    }

    CompGraph g;
    g.nodes.resize(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        OpNode nd = raw[i].node;
        nd.id = compact[i];
        g.nodes[static_cast<size_t>(nd.id)] = nd;
    }
    bool ascending = true;
    for (auto& [s, d] : raw_edges) {
        Edge e{compact[static_cast<size_t>(lookup(s))], compact[static_cast<size_t>(lookup(d))]};
        if (e.src == e.dst) throw CycleError("self loop on node " + std::to_string(s));
        ascending &= (e.src < e.dst);
        g.edges.push_back(e);
    }
    for (auto& [id, t] : raw_inputs)
        g.graph_inputs.emplace_back(compact[static_cast<size_t>(lookup(id))], t);
    for (auto id : raw_outputs)
        g.graph_outputs.push_back(compact[static_cast<size_t>(lookup(id))]);

    // Labels are re-derived when the declared ones are not topological.
    if (!ascending) g = topo_relabel(g);
    g.finalize();
    return g;
}

CompGraph load_graph(const std::string& path, int bpe) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_graph(ss.str(), bpe);
}

std::string serialize_graph(const CompGraph& g) {
    std::ostringstream os;
    for (const auto& nd : g.nodes) {
        os << "node " << nd.id << ' ' << to_string(nd.kind) << " out=" << nd.output.dims[0] << ','
           << nd.output.dims[1] << ',' << nd.output.dims[2] << ',' << nd.output.dims[3];
        if (has_kernel(nd.kind)) os << " k=" << nd.kernel_hw.first << 'x' << nd.kernel_hw.second;
        if (nd.stride != 1) os << " s=" << nd.stride;
        if (nd.dilation != 1) os << " d=" << nd.dilation;
        if (nd.weight_bytes != 0) os << " w=" << nd.weight_bytes;
        os << '\n';
    }
    for (const auto& e : g.edges) os << "edge " << e.src << ' ' << e.dst << '\n';
    for (const auto& [id, t] : g.graph_inputs)
        os << "input " << id << ' ' << t.dims[0] << ',' << t.dims[1] << ',' << t.dims[2] << ','
           << t.dims[3] << '\n';
    for (int id : g.graph_outputs) os << "output " << id << '\n';
    return os.str();
}

void save_graph(const CompGraph& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    f << serialize_graph(g);
}

} // namespace lfopt
