"""Rank all ten models by accuracy and by time per round.

Epochs are cut to keep the demo short, so absolute numbers mean little; the
report and ranking tables are written to ``demo_results/``.
"""

from weekcast.data import generate_synthetic
from weekcast.reporting import ranking_rows, report_rows, rows_to_markdown, write_ranking, write_report
from weekcast.walkforward import WalkForwardOptions, prepare_data, rank_models, run_rounds
from weekcast.zoo import MODEL_IDS

# %%
data = prepare_data(generate_synthetic(30, "sine+noise", seed=5), split_after=24)
opts = WalkForwardOptions(rounds=2, base_seed=0)

reports = []
for model_id in MODEL_IDS:
    report = run_rounds(model_id, data, opts, epochs=10)
    write_report(report, "demo_results")
    reports.append(report)
    print(f"{model_id:<18} RMSE/mean {report.rmse_over_mean:.5f}  {report.mean_seconds:6.2f} s/round")

# %%
print(rows_to_markdown(report_rows(reports[0]), reports[0].model_id))

# %%
ranking = rank_models(reports)
write_ranking(ranking, "demo_results")
print(rows_to_markdown(ranking_rows(ranking), "Ranking"))
