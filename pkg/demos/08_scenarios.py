"""
Scenario files and reports
==========================

Bundled YAML scenarios drive the whole pipeline and write a JSON report,
per-alpha trajectory CSVs and a text summary.
"""
import tempfile

from delaystab import bundled_scenarios, export, load_scenario, run_scenario, summary_text

print("bundled:", bundled_scenarios())
out = tempfile.mkdtemp(prefix="delaystab-")
for name in bundled_scenarios():
    record = run_scenario(load_scenario(name))
    print(summary_text(record.to_dict()))
    export(record, directory=out)
print("reports written to", out)
