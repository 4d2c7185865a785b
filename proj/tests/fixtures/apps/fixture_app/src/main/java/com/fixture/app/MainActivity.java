package com.fixture.app;

import android.os.Bundle;
import android.view.View;
import com.fixture.data.Repository;

public class MainActivity extends BaseActivity {
    private Repository repository;
    private final ItemAdapter adapter = new ItemAdapter();

    public void onCreate(Bundle state) {
        repository = new Repository();
        track("create");
        refresh();
        findViewById(1).setOnClickListener(new View.OnClickListener() {
            public void onClick(View v) {
                refresh();
            }
        });
    }

    void refresh() {
        for (String item : repository.load()) {
            adapter.add(item);
        }
        track("refresh");
        render();
    }

    protected void render() {
        if (adapter.size() > 0 && repository != null) {
            adapter.show();
        }
    }
}
