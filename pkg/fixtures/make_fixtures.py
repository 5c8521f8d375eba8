"""Regenerate the shipped fixture files. Run from the fixtures/ directory.

The corpus is handcrafted so that: (a) a dozen sentences satisfy the mining
invariants outright, (b) several near-misses exercise each filter, and (c) a
few sentences only become mineable after unrestricted synthesis feeds
generic tokens (apoptosis, treatment, tumor, ...) back into the vocabulary,
which is what makes later iterations grow.
"""

import csv
import json
from pathlib import Path

HERE = Path(__file__).parent

ABSTRACTS = [
    ("pmid1001", "Platinum combinations in breast cancer",
     "Cisplatin and camptothecin were strongly synergistic in BT-483 cells. "
     "Single-agent activity was modest. Fig. 3 shows dose-response curves."),
    ("pmid1002", "EGFR inhibition in lung models",
     "We observed that gefitinib acted synergistically with vinorelbine in A549 cells. "
     "Erlotinib alone inhibited growth by 40%."),
    ("pmid1003", "Taxane scheduling",
     "Paclitaxel plus carboplatin showed synergy on MCF-7 and T47D cells. "
     "The schedule vs. Dose question remains open."),
    ("pmid1004", "PARP inhibitor combinations",
     "Olaparib and doxorubicin displayed synergism in HeLa cells at low doses. "
     "Olaparib monotherapy was well tolerated."),
    ("pmid1005", "MEK pathway",
     "Trametinib combined with dasatinib synergistically suppressed K562 proliferation. "
     "K562 cells are BCR-ABL positive."),
    ("pmid1006", "Proteasome inhibition",
     "Bortezomib and vorinostat synergize in U2OS cells through ROS induction. "
     "This mirrors earlier myeloma findings."),
    ("pmid1007", "Prostate cancer screens",
     "In PC-3 and DU145 cells, sorafenib with docetaxel had synergistic growth inhibitory effects. "
     "Sunitinib was inactive."),
    ("pmid1008", "Gastric models",
     "Combination treatment with gemcitabine and etoposide caused synergistically increased cell death in SW620 cells. "
     "Etc. and other caveats apply."),
    ("pmid1009", "Hepatoma",
     "Imatinib plus sorafenib showed a synergism effect on HepG2 cells, per Chou-Talalay analysis. "
     "HepG2 xenografts confirmed the result."),
    ("pmid1010", "Colon cancer",
     "At most concentrations tested, sunitinib in combination with etoposide synergistically inhibited HT-29 cells. "
     "A Combination Index value below 1 was observed."),
    ("pmid1011", "Leukemia retreatment",
     "Doxorubicin and etoposide were effective in K562 cells."
     " No synergy keyword here for doxorubicin and etoposide in K562."),
    ("pmid1012", "Negative control",
     "Cisplatin inhibited BT-483 growth. The effect was dose dependent."),
    ("pmid1013", "Keyword without entities",
     "Strong synergy was reported across multiple models. No names are given."),
    ("pmid1014", "One drug with keyword",
     "Cisplatin showed synergy with an unnamed agent in MCF-7 cells."),
    ("pmid1015", "Review of abbreviations",
     "Fig. 4G shows X vs. Y. Dr. Smith et al. reported no interaction."),
    ("pmid1016", "Filler-token sentence A",
     "Apoptosis and treatment were synergistic in tumor cells. "
     "This sentence only matches once generic tokens join the vocabulary."),
    ("pmid1017", "Filler-token sentence B",
     "Combination and therapy showed synergism in growth cells under hypoxia."),
    ("pmid1018", "Filler-token sentence C",
     "Apoptosis and cisplatin synergize in study cells according to the screen."),
    ("pmid1019", "Mixed filler and entity",
     "Treatment and vinorelbine acted synergistically in pathway cells."),
    ("pmid1020", "Second hepatoma report",
     "Lapatinib and trametinib synergize in HepG2 cells. Lapatinib alone was inactive."),
    ("pmid1021", "Ovarian lines",
     "Carboplatin with paclitaxel was synergistic in SKBR3 cells and in T47D cells."),
    ("pmid1022", "Case sensitivity check",
     "CISPLATIN and Camptothecin show synergy in bt-483 cells."),
    ("pmid1023", "Substring trap",
     "Mekanism is not a drug. Trametinib and mek162 display synergism in A549 cells."),
    ("pmid1024", "No punctuation tail",
     "Gefitinib and erlotinib are synergistic on HT-29 cells"),
]

DRUGS = [
    "cisplatin", "camptothecin", "vinorelbine", "gefitinib", "erlotinib",
    "paclitaxel", "docetaxel", "doxorubicin", "lapatinib", "sorafenib",
    "sunitinib", "olaparib", "trametinib", "dasatinib", "bortezomib",
    "carboplatin", "etoposide", "gemcitabine", "imatinib", "vorinostat",
    "mek162", "abt-737", "5-fluorouracil",
]
CELLS = [
    "mcf-7", "bt-483", "a549", "h1299", "skbr3", "hela", "ht-29",
    "k562", "u2os", "pc-3", "du145", "t47d", "sw620", "hepg2",
    "bt-20", "nci-h460",
]
SOURCES = ["seed_dataset", "lincs", "gdsc", "ccle", "nci60"]

# drug pair index offsets and cell picks; label 1 rows chosen to reuse a few
# favoured pairs so the toy task is learnable.
DATASET_ROWS = [
    ("cisplatin", "camptothecin", "bt-483", 1),
    ("cisplatin", "camptothecin", "mcf-7", 1),
    ("gefitinib", "vinorelbine", "a549", 1),
    ("paclitaxel", "carboplatin", "mcf-7", 1),
    ("paclitaxel", "carboplatin", "t47d", 1),
    ("olaparib", "doxorubicin", "hela", 1),
    ("trametinib", "dasatinib", "k562", 1),
    ("bortezomib", "vorinostat", "u2os", 1),
    ("sorafenib", "docetaxel", "pc-3", 1),
    ("imatinib", "sorafenib", "hepg2", 1),
    ("cisplatin", "gefitinib", "a549", 0),
    ("cisplatin", "paclitaxel", "hela", 0),
    ("cisplatin", "erlotinib", "ht-29", 0),
    ("camptothecin", "docetaxel", "du145", 0),
    ("camptothecin", "sunitinib", "sw620", 0),
    ("vinorelbine", "doxorubicin", "mcf-7", 0),
    ("vinorelbine", "lapatinib", "skbr3", 0),
    ("gefitinib", "erlotinib", "nci-h460", 0),
    ("gefitinib", "imatinib", "k562", 0),
    ("erlotinib", "sorafenib", "hepg2", 0),
    ("paclitaxel", "docetaxel", "bt-20", 0),
    ("doxorubicin", "etoposide", "k562", 0),
    ("doxorubicin", "gemcitabine", "sw620", 0),
    ("lapatinib", "trametinib", "hepg2", 0),
    ("sorafenib", "sunitinib", "pc-3", 0),
    ("sunitinib", "etoposide", "ht-29", 0),
    ("olaparib", "carboplatin", "bt-483", 0),
    ("trametinib", "mek162", "a549", 0),
    ("dasatinib", "bortezomib", "k562", 0),
    ("bortezomib", "imatinib", "u2os", 0),
    ("carboplatin", "gemcitabine", "nci-h460", 0),
    ("etoposide", "gemcitabine", "sw620", 0),
    ("imatinib", "vorinostat", "hepg2", 0),
    ("vorinostat", "abt-737", "u2os", 0),
    ("5-fluorouracil", "cisplatin", "ht-29", 0),
    ("5-fluorouracil", "etoposide", "sw620", 0),
    ("abt-737", "camptothecin", "hela", 0),
    ("mek162", "gefitinib", "a549", 0),
    ("docetaxel", "carboplatin", "nci-h460", 0),
    ("paclitaxel", "gemcitabine", "bt-20", 0),
]


def main() -> None:
    with (HERE / "corpus.jsonl").open("w", encoding="utf-8") as fh:
        for doc_id, title, text in ABSTRACTS:
            fh.write(json.dumps({"doc_id": doc_id, "title": title, "text": text}) + "\n")

    with (HERE / "vocab.tsv").open("w", encoding="utf-8") as fh:
        fh.write("surface\ttype\tsource\n")
        for i, name in enumerate(DRUGS):
            fh.write(f"{name}\tdrug\t{SOURCES[i % len(SOURCES)]}\n")
        for i, name in enumerate(CELLS):
            fh.write(f"{name}\tcell_line\t{SOURCES[i % len(SOURCES)]}\n")

    with (HERE / "dataset.csv").open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["drug_a", "drug_b", "cell_line", "label"])
        writer.writerows(DATASET_ROWS)


if __name__ == "__main__":
    main()
