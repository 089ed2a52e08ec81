#include "qctrl/photonic.hpp"

#include <algorithm>

namespace qctrl::photonic {

namespace {

template <class... Ts> struct Overloaded : Ts... {
    using Ts::operator()...;
};

template <class T> T field(const nlohmann::json &j, const char *key) {
    if (!j.contains(key)) {
        throw ValidationError(std::string("network file: missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw ValidationError(std::string("network file: bad field '") + key + "': " + e.what());
    }
}

Element element_from_json(const nlohmann::json &s) {
    const auto type = field<std::string>(s, "type");
    if (type == "pbs") {
        const auto ports = field<nlohmann::json>(s, "ports");
        return Pbs{field<std::array<std::string, 2>>(ports, "in"), field<std::array<std::string, 2>>(ports, "out")};
    }
    if (type == "hwp") {
        return Hwp{field<std::string>(s, "path")};
    }
    if (type == "device") {
        return Device{field<std::string>(s, "path"), field<std::string>(s, "slot")};
    }
    if (type == "bb_device") {
        return BigBrotherDevice{field<std::string>(s, "path"), field<std::string>(s, "slot")};
    }
    if (type == "reroute") {
        return Reroute{field<std::vector<std::string>>(s, "ports")};
    }
    throw ValidationError("network file: unknown stage type '" + type + "'");
}

} // namespace

nlohmann::ordered_json to_json(const Network &net) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["space"] = {{"paths", net.space().paths}, {"internal_dim", net.space().internal_dim}};
    j["input_path"] = net.input_path();
    j["output_path"] = net.output_path();
    j["target"] = to_string(net.target());
    ordered_json stages = ordered_json::array();
    for (const auto &e : net.stages()) {
        stages.push_back(std::visit(
            Overloaded{
                [](const Pbs &b) {
                    return ordered_json{{"type", "pbs"}, {"ports", {{"in", b.in_ports}, {"out", b.out_ports}}}};
                },
                [](const Hwp &h) { return ordered_json{{"type", "hwp"}, {"path", h.path}}; },
                [](const Device &d) { return ordered_json{{"type", "device"}, {"path", d.path}, {"slot", d.slot}}; },
                [](const BigBrotherDevice &d) {
                    return ordered_json{{"type", "bb_device"}, {"path", d.path}, {"slot", d.slot}};
                },
                [](const Reroute &r) { return ordered_json{{"type", "reroute"}, {"ports", r.destinations}}; },
            },
            e));
    }
    j["stages"] = std::move(stages);
    j["slots"] = net.slots();
    return j;
}

Network network_from_json(const nlohmann::json &j) {
    const auto space_j = field<nlohmann::json>(j, "space");
    PhotonicSpace space{field<std::vector<std::string>>(space_j, "paths"), field<std::size_t>(space_j, "internal_dim")};
    std::vector<Element> stages;
    for (const auto &s : field<nlohmann::json>(j, "stages")) {
        stages.push_back(element_from_json(s));
    }
    const Target target = j.contains("target") ? target_from_string(field<std::string>(j, "target")) : Target::None;
    const std::string in = j.contains("input_path") ? field<std::string>(j, "input_path") : space.paths.front();
    const std::string out = j.contains("output_path") ? field<std::string>(j, "output_path") : in;
    Network net(std::move(space), std::move(stages), in, out, target);
    if (j.contains("slots")) {
        auto declared = field<std::vector<std::string>>(j, "slots");
        auto actual = net.slots();
        std::sort(declared.begin(), declared.end());
        std::sort(actual.begin(), actual.end());
        if (declared != actual) {
            throw ValidationError("network file: declared slots do not match the device stages");
        }
    }
    return net;
}

} // namespace qctrl::photonic
