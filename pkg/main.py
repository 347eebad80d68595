# stored_light/main.py
# 설치 없이 저장소 루트에서 바로 실행할 때 사용합니다: python main.py simulate --config config/scenario.json

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from stored_light.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
