import filecmp
from argparse import ArgumentParser
from pathlib import Path
from typing import List

import pandas as pd

from retainglu.cli import main as retainglu_main

TINY = ["--history", "12", "--horizon", "6", "--embedding", "8", "--hidden", "8"]
QUICK = ["--max-epochs", "4", "--patience", "2"]
COMPARED = ("*.csv", "*.json", "*.rtnw")

ACCEPTANCE_DIMS = ["--history", "36", "--horizon", "6", "--embedding", "16", "--hidden", "16"]
ACCEPTANCE_TRAINING = ["--layers", "1", "--max-epochs", "60", "--patience", "8"]
PARITY = 0.10
EVENT_DECAY = 0.20
EVENT_HORIZON_MIN = -60


def compare(one: Path, two: Path) -> None:
    if not filecmp.cmp(one, two, shallow=False):
        print("*** MISMATCH ***", one, two)


def run(argv: List[str]) -> None:
    code = retainglu_main(argv)
    if code != 0:
        print("*** FAILED ***", code, " ".join(argv))


class Tester:
    def __init__(self, output_base: Path, seed: int, patients: int, days: int):
        self.seed = seed
        self.patients = patients
        self.days = days
        output_base.mkdir(parents=True, exist_ok=True)
        self.outputs = [output_base / "first", output_base / "second"]
        for output_dir in self.outputs:
            output_dir.mkdir(exist_ok=True)

    def pipeline(self, output_dir: Path) -> None:
        common = ["--output-dir", str(output_dir), "--seed", str(self.seed)]
        data_dir = output_dir / "generate" / "data"
        weights = output_dir / "train" / "model.rtnw"

        print(output_dir.name, "generate")
        run(
            ["generate", "--run-name", "generate"]
            + common
            + ["--patients", str(self.patients), "--days", str(self.days)]
        )
        print(output_dir.name, "train")
        run(
            ["train", "--run-name", "train", "--data-dir", str(data_dir)]
            + common
            + ["--test-patient", "patient01"]
            + TINY
            + QUICK
        )
        print(output_dir.name, "evaluate")
        run(
            ["evaluate", "--run-name", "evaluate", "--data-dir", str(data_dir)]
            + common
            + ["--weights", str(weights)]
        )
        print(output_dir.name, "interpret")
        run(
            ["interpret", "--run-name", "interpret", "--data-dir", str(data_dir)]
            + common
            + ["--weights", str(weights), "--test-patient", "patient01", "--audit"]
        )

    def test_reproducible(self) -> None:
        print("--- REPRODUCIBLE ---")
        for output_dir in self.outputs:
            self.pipeline(output_dir)

        first, second = self.outputs
        for pattern in COMPARED:
            for one in sorted(first.rglob(pattern)):
                two = second / one.relative_to(first)
                if not two.exists():
                    print("*** MISSING ***", two)
                    continue
                print(one.relative_to(first))
                compare(one, two)


class Acceptance:
    """Five simulated patients over 31 days: leave-one-patient-out parity of
    RETAIN with the LSTM baseline, and event contributions that fade with lag."""

    def __init__(self, output_dir: Path, seed: int):
        self.output_dir = output_dir / "acceptance"
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.common = ["--output-dir", str(self.output_dir), "--seed", str(seed)]
        self.data_dir = self.output_dir / "generate" / "data"

    def generate(self) -> None:
        print("acceptance generate")
        run(["generate", "--run-name", "generate", "--patients", "5", "--days", "31"] + self.common)

    def lopo_rmse(self, model: str) -> float:
        print("acceptance evaluate", model)
        run(
            ["evaluate", "--run-name", f"lopo-{model}", "--data-dir", str(self.data_dir)]
            + self.common
            + ["--model", model]
            + ACCEPTANCE_DIMS
            + ACCEPTANCE_TRAINING
        )
        frame = pd.read_csv(self.output_dir / f"lopo-{model}" / "metrics.csv")
        return float(frame.loc[frame["patient"] == "mean", "rmse"].iloc[0])

    def test_parity(self) -> None:
        print("--- PARITY ---")
        retain = self.lopo_rmse("retain")
        lstm = self.lopo_rmse("lstm")
        gap = abs(retain - lstm) / lstm
        print(f"RETAIN {retain:.3f} LSTM {lstm:.3f} mg/dL, gap {gap:.1%}")
        if gap > PARITY:
            print("*** PARITY ***", f"{gap:.1%}")

    def test_event_decay(self) -> None:
        print("--- EVENT DECAY ---")
        run(
            ["train", "--run-name", "train", "--data-dir", str(self.data_dir)]
            + self.common
            + ["--test-patient", "patient01"]
            + ACCEPTANCE_DIMS
            + ACCEPTANCE_TRAINING
        )
        run(
            ["interpret", "--run-name", "interpret", "--data-dir", str(self.data_dir)]
            + self.common
            + ["--weights", str(self.output_dir / "train" / "model.rtnw")]
            + ["--test-patient", "patient01"]
        )
        frame = pd.read_csv(self.output_dir / "interpret" / "max.csv")
        for signal in ("insulin", "cho"):
            rows = frame[frame["signal"] == signal]
            current = float(rows.loc[rows["offset_min"] == 0, "value"].iloc[0])
            late = float(rows.loc[rows["offset_min"] < EVENT_HORIZON_MIN, "value"].max())
            print(f"{signal}: lag 0 {current:.4f}, beyond 60 min {late:.4f}")
            if not late < EVENT_DECAY * current:
                print("*** EVENT DECAY ***", signal)


def main():
    parser = ArgumentParser()
    parser.add_argument(
        "output_dir", type=lambda value: Path(value).resolve()
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--patients", type=int, default=3)
    parser.add_argument("--days", type=int, default=4)
    parser.add_argument(
        "--acceptance", action="store_true", help="also run the 31-day parity and decay checks"
    )
    args = parser.parse_args()

    tester = Tester(args.output_dir, args.seed, args.patients, args.days)
    tester.test_reproducible()
    if args.acceptance:
        acceptance = Acceptance(args.output_dir, args.seed)
        acceptance.generate()
        acceptance.test_parity()
        acceptance.test_event_decay()


if __name__ == "__main__":  # pragma: no cover
    main()
