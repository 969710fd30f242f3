"""The five-peer worked example (peers 1..5 here are ids 0..4)."""

ALPHA = 0.9
N_PEERS = 5

# (uploader, downloader, amount)
EPOCH0 = [
    (0, 1, 100), (0, 2, 200),
    (1, 4, 100),
    (2, 1, 100), (2, 3, 200),
    (3, 0, 100),
    (4, 0, 200), (4, 3, 100),
]
EPOCH1 = [(3, 0, 100)]

X1 = [0.4737, 0.3103, 0.5745, 0.2308, 0.7297]
X2 = [0.4060, 0.3103, 0.5745, 0.3846, 0.7297]
BETA1 = [1 / 7, 0.0, 0.0, 1 / 5, 0.0]

TOLERANCE = 1e-4
