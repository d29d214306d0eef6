#include "hazpipe/submission.hpp"

#include <fstream>
#include <sstream>

#include "hazpipe/errors.hpp"
#include "hazpipe/util.hpp"

namespace hazpipe {

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        out.push_back(c);
        if (c == '"') out.push_back('"');
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    size_t i = 0;
    while (i <= line.size()) {
        if (i == line.size()) {
            if (quoted)
                throw ValidationError("line " + std::to_string(lineno) + ": unterminated quote");
            fields.push_back(cur);
            break;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    i += 2;
                } else {
                    quoted = false;
                    ++i;
                }
            } else {
                cur.push_back(c);
                ++i;
            }
        } else if (c == '"') {
            if (!cur.empty())
                throw ValidationError("line " + std::to_string(lineno) + ": stray quote");
            quoted = true;
            ++i;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
            ++i;
        } else {
            cur.push_back(c);
            ++i;
        }
    }
    return fields;
}

}  // namespace

std::string submission_to_csv(const SubmissionTable& table) {
    std::ostringstream out;
    out << "ID,Driver_State_Changed";
    for (int i = 1; i <= table.slots; ++i) out << ",Hazard_Track_" << i;
    for (int i = 1; i <= table.slots; ++i) out << ",Hazard_Name_" << i;
    out << "\n";

    for (const auto& [key, row] : table.rows) {
        const auto& [video_id, frame_index] = key;
        if (static_cast<int>(row.hazards.size()) > table.slots) {
            std::ostringstream msg;
            msg << video_id << " frame " << frame_index << ": " << row.hazards.size()
                << " hazards exceed the " << table.slots << " slots";
            throw ValidationError(msg.str());
        }
        out << csv_escape(video_id + "_" + std::to_string(frame_index));
        out << "," << (row.driver_state_changed ? "True" : "False");
        for (int i = 0; i < table.slots; ++i) {
            out << ",";
            if (i < static_cast<int>(row.hazards.size()))
                out << csv_escape(row.hazards[i].first);
        }
        for (int i = 0; i < table.slots; ++i) {
            out << ",";
            if (i < static_cast<int>(row.hazards.size()))
                out << csv_escape(row.hazards[i].second);
        }
        out << "\n";
    }
    return out.str();
}

void write_submission(const SubmissionTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write submission: " + path);
    out << submission_to_csv(table);
    if (!out) throw IoError("short write: " + path);
}

SubmissionTable submission_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("submission: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_csv_line(line, 1);
    if (header.size() < 4 || header[0] != "ID" || header[1] != "Driver_State_Changed" ||
        header.size() % 2 != 0)
        throw ValidationError("submission: unrecognized header");
    const int slots = static_cast<int>((header.size() - 2) / 2);
    for (int i = 0; i < slots; ++i) {
        if (header[2 + i] != "Hazard_Track_" + std::to_string(i + 1) ||
            header[2 + slots + i] != "Hazard_Name_" + std::to_string(i + 1))
            throw ValidationError("submission: unrecognized header column " + header[2 + i]);
    }

    SubmissionTable table;
    table.slots = slots;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line, lineno);
        if (static_cast<int>(fields.size()) != 2 + 2 * slots) {
            std::ostringstream msg;
            msg << "line " << lineno << ": expected " << 2 + 2 * slots << " fields, got "
                << fields.size();
            throw ValidationError(msg.str());
        }

        const std::string& id = fields[0];
        const auto underscore = id.rfind('_');
        if (underscore == std::string::npos || underscore == 0 || underscore + 1 == id.size())
            throw ValidationError("line " + std::to_string(lineno) + ": ID \"" + id +
                                  "\" is not {video_id}_{frame_index}");
        const std::string video_id = id.substr(0, underscore);
        int frame_index = -1;
        try {
            size_t pos = 0;
            frame_index = std::stoi(id.substr(underscore + 1), &pos);
            if (pos != id.size() - underscore - 1) frame_index = -1;
        } catch (const std::exception&) {
            frame_index = -1;
        }
        if (frame_index < 0)
            throw ValidationError("line " + std::to_string(lineno) + ": ID \"" + id +
                                  "\" has no valid frame index");

        SubmissionRow row;
        const std::string flag = to_lower(fields[1]);
        if (flag == "true" || flag == "1")
            row.driver_state_changed = true;
        else if (flag == "false" || flag == "0")
            row.driver_state_changed = false;
        else
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": Driver_State_Changed must be a boolean, got \"" + fields[1] +
                                  "\"");

        bool ended = false;
        for (int i = 0; i < slots; ++i) {
            const std::string& track = fields[2 + i];
            const std::string& name = fields[2 + slots + i];
            if (track.empty()) {
                if (!name.empty())
                    throw ValidationError("line " + std::to_string(lineno) + ": Hazard_Name_" +
                                          std::to_string(i + 1) + " set without a track");
                ended = true;
                continue;
            }
            if (ended)
                throw ValidationError("line " + std::to_string(lineno) + ": Hazard_Track_" +
                                      std::to_string(i + 1) + " follows an empty slot");
            row.hazards.emplace_back(track, name);
        }

        if (!table.rows.emplace(std::make_pair(video_id, frame_index), std::move(row)).second)
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate ID \"" + id +
                                  "\"");
    }
    return table;
}

SubmissionTable read_submission(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open submission: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return submission_from_csv(buffer.str());
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

}  // namespace hazpipe
