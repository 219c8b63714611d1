import json
import os
from pathlib import Path

import pandas as pd
import streamlit as st

LOG_PATH = Path(os.environ.get("MODEM_LOG_PATH", "data/transmissions.jsonl"))


def load_records() -> pd.DataFrame:
    if not LOG_PATH.exists():
        return pd.DataFrame()
    rows = []
    with LOG_PATH.open("r", encoding="utf-8") as fp:
        for line in fp:
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError:
                continue
    return pd.DataFrame(rows)


def main() -> None:
    st.set_page_config(page_title="Modem Link Quality", layout="wide")
    st.title("Voiceband Modem Link Quality")

    df = load_records()
    if df.empty or "ber" not in df:
        st.info("No transmissions logged yet. Run `python -m app bench --log` or call /transmit to populate data.")
        return

    links = df[df["ber"].notna()]
    col1, col2, col3, col4 = st.columns(4)
    col1.metric("Transmissions", len(links))
    col2.metric("Mean BER", f"{links['ber'].mean() * 100:.3f}%")
    col3.metric("Mean CER", f"{links['cer'].mean() * 100:.2f}%")
    col4.metric("Mean Throughput (bps)", f"{links['throughput_bps'].mean():.2f}")

    kinds = sorted(links["kind"].dropna().unique())
    chosen = st.multiselect("Kinds", kinds, default=kinds)
    view = links[links["kind"].isin(chosen)]

    st.subheader("Recent Transmissions")
    st.dataframe(view.sort_values("ts", ascending=False).head(50)[[
        "trace_id",
        "kind",
        "seed",
        "ber",
        "cer",
        "throughput_bps",
        "dropped_frames",
        "vad_suppressed_frames",
        "sent",
        "received",
    ]])

    st.subheader("BER over Time")
    st.line_chart(view.sort_values("ts").set_index("ts")["ber"])

    st.subheader("Throughput Distribution")
    st.bar_chart(view["throughput_bps"].round(2).value_counts().sort_index())


if __name__ == "__main__":
    main()
