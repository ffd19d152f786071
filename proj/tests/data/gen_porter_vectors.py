"""Regenerates porter_vectors.tsv with NLTK's reference implementation of the
original 1980 algorithm. Usage: python3 gen_porter_vectors.py WORDS_SOURCE_DIR"""
import pathlib
import re
import sys

from nltk.stem.porter import PorterStemmer

CLASSIC = """caresses ponies ties caress cats feed agreed plastered bled motoring sing
conflated troubled sized hopping tanned falling hissing fizzed failing filing happy sky
relational conditional rational valenci hesitanci digitizer conformabli radicalli
differentli vileli analogousli vietnamization predication operator feudalism decisiveness
hopefulness callousness formaliti sensitiviti sensibiliti triplicate formative formalize
electriciti electrical hopeful goodness revival allowance inference airliner gyroscopic
adjustable defensible irritant replacement adjustment dependent adoption homologou
communism activate angulariti homologous effective bowdlerize probate rate cease controll
roll generalizations oscillators computing computer computed computation""".split()

def main() -> None:
    words = set(CLASSIC)
    for path in sorted(pathlib.Path(sys.argv[1]).rglob("*")):
        if path.is_file():
            text = path.read_text(errors="ignore").lower()
            words.update(w for w in re.findall(r"[a-z]+", text) if len(w) <= 20)
    stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
    out = pathlib.Path(__file__).with_name("porter_vectors.tsv")
    with out.open("w") as f:
        for w in sorted(words):
            f.write(f"{w}\t{stemmer.stem(w, to_lowercase=False)}\n")

if __name__ == "__main__":
    main()
