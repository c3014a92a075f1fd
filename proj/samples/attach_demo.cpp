// Builds the same memory two ways, directly and through an attachment,
// then runs a few high writes through each.

#include <iostream>

#include "attach_stobj/attach_stobj.hpp"

using namespace attach_stobj;

int main() {
    Registry reg = bigmem::attached_registry();
    const auto& binding = reg.effective_binding(std::string(bigmem::kSymmetricName));
    std::cout << bigmem::kSymmetricName << " executes on " << binding.effective_foundation << " via";
    for (const auto& name : std::get<AttachedVia>(binding.provenance).chain) std::cout << ' ' << name;
    std::cout << '\n';
    for (const auto& op : binding.effective_exec) std::cout << "  " << op << '\n';

    WorkloadSpec spec;
    spec.n_writes = 5000;
    spec.base_addr = 6 * spec.range_len;
    spec.label = "high";
    std::vector<BenchReport> reports;
    for (MemoryKind kind : {MemoryKind::Symmetric, MemoryKind::Asymmetric, MemoryKind::Attached}) {
        spec.model = kind;
        reports.push_back(run_benchmark(spec));
    }
    std::cout << to_table(reports);
}
