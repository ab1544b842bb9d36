from fastapi import APIRouter

from ..models.arrays import to_array
from ..models.wavelet import BandsPayload, DwtRequest, DwtResponse, IdwtResponse
from ...engine.tensor import Tensor, no_grad
from ...model.wavelet import WaveletBands, idwt2, wavedec

router = APIRouter(prefix="/wavelet")


@router.post("/dwt", response_model=DwtResponse)
def dwt(payload: DwtRequest):
    source = Tensor(to_array(payload.data, "data"))
    with no_grad():
        levels = wavedec(source, payload.levels)
    return DwtResponse(
        levels=[
            BandsPayload(**{name: band.data.tolist() for name, band in bands.items()})
            for bands in levels
        ]
    )


@router.post("/idwt", response_model=IdwtResponse)
def idwt(payload: BandsPayload):
    bands = WaveletBands(
        **{name: Tensor(to_array(getattr(payload, name), name)) for name in ("ll", "lh", "hl", "hh")}
    )
    with no_grad():
        out = idwt2(bands)
    return IdwtResponse(data=out.data.tolist())
