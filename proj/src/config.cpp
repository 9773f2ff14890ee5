#include "psf/config.hpp"

#include <fstream>
#include <sstream>

#include "psf/error.hpp"

namespace psf::harness {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

std::vector<double> parse_doubles(const std::string& s, std::size_t expected,
                                  const std::string& what) {
    std::istringstream in(s);
    std::vector<double> out;
    double v;
    while (in >> v)
        out.push_back(v);
    if (out.size() != expected)
        throw DataError("config: " + what + " expects " + std::to_string(expected) + " numbers");
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace

KvFile KvFile::parse(const std::string& text) {
    KvFile kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw DataError("config: malformed section header at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            kv.sections[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: expected key = value at line " + std::to_string(lineno));
        kv.sections[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw FileMissingError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool KvFile::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string KvFile::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
    const auto s = sections.find(section);
    if (s == sections.end())
        return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double KvFile::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    const std::string v = get(section, key, "");
    if (v.empty())
        return fallback;
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw DataError("config: bad number for " + section + "." + key + ": " + v);
    }
}

int KvFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    const std::string v = get(section, key, "");
    if (v.empty())
        return fallback;
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw DataError("config: bad integer for " + section + "." + key + ": " + v);
    }
}

namespace {

// Applies only the keys present in the section.
void apply_train_overrides(const KvFile& kv, const std::string& section, nn::TrainConfig& tc) {
    tc.batch_size = kv.get_int(section, "batch_size", tc.batch_size);
    tc.lr0 = kv.get_double(section, "lr0", tc.lr0);
    tc.momentum = kv.get_double(section, "momentum", tc.momentum);
    tc.weight_decay = kv.get_double(section, "weight_decay", tc.weight_decay);
    if (kv.has(section, "schedule")) {
        const std::string sched = kv.get(section, "schedule", "");
        if (sched == "step")
            tc.schedule = nn::ScheduleKind::Step;
        else if (sched == "poly")
            tc.schedule = nn::ScheduleKind::Polynomial;
        else
            throw DataError("config: unknown schedule: " + sched);
    }
    tc.step_gamma = kv.get_double(section, "step_gamma", tc.step_gamma);
    tc.step_size = kv.get_int(section, "step_size", tc.step_size);
    tc.poly_power = kv.get_double(section, "poly_power", tc.poly_power);
    tc.epochs = kv.get_int(section, "epochs", tc.epochs);
    tc.patience = kv.get_int(section, "patience", tc.patience);
    tc.validate();
}

} // namespace

AppConfig AppConfig::defaults() {
    AppConfig cfg;
    cfg.profiles = printscan::default_profiles();
    return cfg;
}

nn::TrainConfig AppConfig::train_for(models::Family family) const {
    nn::TrainConfig tc = models::family_train_defaults(family);
    apply_train_overrides(raw, "train", tc);
    apply_train_overrides(raw, std::string("train ") + models::family_name(family), tc);
    return tc;
}

AppConfig AppConfig::from_file(const std::string& path) {
    const KvFile kv = KvFile::load(path);
    AppConfig cfg = defaults();
    cfg.raw = kv;

    manip::Params& mp = cfg.manip_params;
    mp.awgn_sigma = kv.get_double("manipulations", "awgn_sigma", mp.awgn_sigma);
    mp.gb_kernel = kv.get_int("manipulations", "gb_kernel", mp.gb_kernel);
    mp.gb_sigma = kv.get_double("manipulations", "gb_sigma", mp.gb_sigma);
    mp.jpeg_quality = kv.get_int("manipulations", "jpeg_quality", mp.jpeg_quality);
    mp.mf_kernel = kv.get_int("manipulations", "mf_kernel", mp.mf_kernel);
    mp.rs_ratio = kv.get_double("manipulations", "rs_ratio", mp.rs_ratio);

    apply_train_overrides(kv, "train", cfg.train);

    // Profile sections replace the built-in list when any are present.
    std::vector<printscan::PrinterProfile> parsed;
    for (const auto& [name, keys] : kv.sections) {
        if (name.rfind("profile ", 0) != 0)
            continue;
        printscan::PrinterProfile p;
        p.name = trim(name.substr(8));
        if (p.name.empty())
            throw DataError("config: profile section without a name");
        const auto get = [&](const char* key, double fallback) {
            return kv.get_double(name, key, fallback);
        };
        if (kv.has(name, "color_matrix")) {
            const auto m = parse_doubles(keys.at("color_matrix"), 9, "color_matrix");
            std::copy(m.begin(), m.end(), p.color_matrix.begin());
        }
        if (kv.has(name, "color_offset")) {
            const auto o = parse_doubles(keys.at("color_offset"), 3, "color_offset");
            std::copy(o.begin(), o.end(), p.color_offset.begin());
        }
        p.halftone_amplitude = get("halftone_amplitude", 0.0);
        p.halftone_cell = kv.get_int(name, "halftone_cell", 4);
        p.blur_sigma = get("blur_sigma", 0.0);
        p.noise_sigma = get("noise_sigma", 0.0);
        p.gain_field_amplitude = get("gain_field_amplitude", 0.0);
        p.geometric_jitter = get("geometric_jitter", 0.0);
        p.requant_quality = kv.get_int(name, "requant_quality", 0);
        printscan::validate_profile(p);
        parsed.push_back(std::move(p));
    }
    if (!parsed.empty())
        cfg.profiles = std::move(parsed);
    return cfg;
}

std::string AppConfig::serialize() const {
    std::ostringstream out;
    out << "# printscan-forensics configuration\n\n";
    out << "[manipulations]\n";
    out << "awgn_sigma = " << format_double(manip_params.awgn_sigma) << "\n";
    out << "gb_kernel = " << manip_params.gb_kernel << "\n";
    out << "gb_sigma = " << format_double(manip_params.gb_sigma) << "\n";
    out << "jpeg_quality = " << manip_params.jpeg_quality << "\n";
    out << "mf_kernel = " << manip_params.mf_kernel << "\n";
    out << "rs_ratio = " << format_double(manip_params.rs_ratio) << "\n\n";

    // Shared base; rate, momentum and schedule live in the per-family
    // sections so the built-in family defaults stay in force unless
    // overridden.
    out << "[train]\n";
    out << "batch_size = " << train.batch_size << "\n";
    out << "weight_decay = " << format_double(train.weight_decay) << "\n";
    out << "epochs = " << train.epochs << "\n";
    out << "patience = " << train.patience << "\n";

    for (const auto family : {models::Family::Bayar2016, models::Family::Proposed,
                              models::Family::XceptionMini}) {
        const nn::TrainConfig tc = models::family_train_defaults(family);
        out << "\n[train " << models::family_name(family) << "]\n";
        out << "lr0 = " << format_double(tc.lr0) << "\n";
        out << "momentum = " << format_double(tc.momentum) << "\n";
        if (tc.schedule == nn::ScheduleKind::Step) {
            out << "schedule = step\n";
            out << "step_gamma = " << format_double(tc.step_gamma) << "\n";
            out << "step_size = " << tc.step_size << "\n";
        } else {
            out << "schedule = poly\n";
            out << "poly_power = " << format_double(tc.poly_power) << "\n";
        }
    }

    for (const auto& p : profiles) {
        out << "\n[profile " << p.name << "]\n";
        out << "color_matrix =";
        for (double v : p.color_matrix)
            out << " " << format_double(v);
        out << "\n";
        out << "color_offset =";
        for (double v : p.color_offset)
            out << " " << format_double(v);
        out << "\n";
        out << "halftone_amplitude = " << format_double(p.halftone_amplitude) << "\n";
        out << "halftone_cell = " << p.halftone_cell << "\n";
        out << "blur_sigma = " << format_double(p.blur_sigma) << "\n";
        out << "noise_sigma = " << format_double(p.noise_sigma) << "\n";
        out << "gain_field_amplitude = " << format_double(p.gain_field_amplitude) << "\n";
        out << "geometric_jitter = " << format_double(p.geometric_jitter) << "\n";
        out << "requant_quality = " << p.requant_quality << "\n";
    }
    return out.str();
}

void AppConfig::write(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw DataError("config: cannot write " + path);
    out << serialize();
}

printscan::PrinterProfile AppConfig::profile(const std::string& name) const {
    if (name.rfind("jpeg:", 0) == 0) {
        try {
            return printscan::jpeg_attack_profile(std::stoi(name.substr(5)));
        } catch (const std::invalid_argument&) {
            throw UsageError("bad jpeg profile spec: " + name);
        }
    }
    for (const auto& p : profiles)
        if (p.name == name)
            return p;
    throw UsageError("unknown printer profile: " + name);
}

} // namespace psf::harness
